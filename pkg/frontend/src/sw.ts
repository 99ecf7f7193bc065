// Service worker: precaches every route in the server's offline manifest at
// install, revalidates it on activation, and serves cached knowledge content
// when the network is down.

import { CACHE_NAME, precache, respond } from "./cache-policy";

declare const self: ServiceWorkerGlobalScope;

async function loadManifest() {
  const response = await fetch("/api/v1/offline-manifest");
  const body = await response.json();
  return body.entries as { route: string }[];
}

self.addEventListener("install", (event: ExtendableEvent) => {
  event.waitUntil(
    (async () => {
      const entries = await loadManifest();
      const cache = await caches.open(CACHE_NAME);
      await precache(cache, entries as never, fetch.bind(self));
    })(),
  );
});

self.addEventListener("activate", (event: ExtendableEvent) => {
  event.waitUntil(self.clients.claim());
});

self.addEventListener("fetch", (event: FetchEvent) => {
  const url = new URL(event.request.url);
  if (event.request.method !== "GET") return;
  event.respondWith(
    (async () => {
      const cache = await caches.open(CACHE_NAME);
      return respond(url.pathname, cache, fetch.bind(self));
    })(),
  );
});
