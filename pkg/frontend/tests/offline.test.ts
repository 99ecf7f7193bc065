// Offline shell policy: manifest routes are precached and served when the
// network is down; generation routes are never cached.

import { describe, expect, it } from "vitest";

import { isCacheable, precache, respond } from "../src/cache-policy";
import type { ManifestEntry } from "../src/api";

class FakeCache {
  store = new Map<string, Response>();
  async put(route: string, response: Response) {
    this.store.set(route, response);
  }
  async match(route: string) {
    return this.store.get(route);
  }
}

const MANIFEST: ManifestEntry[] = [
  { route: "/", content_hash: "0".repeat(64), byte_size: 10 },
  { route: "/api/v1/sites", content_hash: "1".repeat(64), byte_size: 20 },
  { route: "/api/v1/knowledge/background", content_hash: "2".repeat(64), byte_size: 30 },
  { route: "/api/v1/knowledge/historical-reconstruction", content_hash: "3".repeat(64), byte_size: 30 },
];

const okFetch: typeof fetch = async (input) =>
  new Response(`content of ${String(input)}`, { status: 200 });

const downFetch: typeof fetch = async () => {
  throw new TypeError("network disabled");
};

describe("isCacheable", () => {
  const routes = new Set(MANIFEST.map((e) => e.route));

  it("accepts manifest routes only", () => {
    expect(isCacheable("/api/v1/knowledge/background", routes)).toBe(true);
    expect(isCacheable("/api/v1/knowledge/not-listed", routes)).toBe(false);
  });

  it("never caches generation, job, session or image routes", () => {
    const withBad = new Set([...routes, "/api/v1/generate", "/api/v1/jobs/j1"]);
    expect(isCacheable("/api/v1/generate", withBad)).toBe(false);
    expect(isCacheable("/api/v1/jobs/j1", withBad)).toBe(false);
    expect(isCacheable("/api/v1/sessions", withBad)).toBe(false);
    expect(isCacheable("/api/v1/images/x", withBad)).toBe(false);
  });
});

describe("precache and respond", () => {
  it("precaches every manifest entry", async () => {
    const cache = new FakeCache();
    const count = await precache(cache, MANIFEST, okFetch);
    expect(count).toBe(MANIFEST.length);
    expect(cache.store.has("/api/v1/knowledge/background")).toBe(true);
  });

  it("serves all cached knowledge routes with the network disabled", async () => {
    const cache = new FakeCache();
    await precache(cache, MANIFEST, okFetch);
    for (const entry of MANIFEST) {
      const response = await respond(entry.route, cache, downFetch);
      expect(response.status).toBe(200);
      expect(await response.text()).toContain(entry.route);
    }
  });

  it("prefers the live network when available", async () => {
    const cache = new FakeCache();
    await cache.put("/", new Response("stale", { status: 200 }));
    const response = await respond("/", cache, okFetch);
    expect(await response.text()).toBe("content of /");
  });

  it("returns 503 for uncached routes while offline", async () => {
    const cache = new FakeCache();
    const response = await respond("/api/v1/generate", cache, downFetch);
    expect(response.status).toBe(503);
  });
});
