// Offline shell policy, shared between the service worker and its tests.
// Cacheable routes come from the server's offline manifest; generation,
// jobs and session routes are never cached.

import type { ManifestEntry } from "./api";

export const CACHE_NAME = "studio-shell-v1";

const NEVER_CACHE = ["/api/v1/generate", "/api/v1/jobs/", "/api/v1/sessions", "/api/v1/images/"];

export function isCacheable(route: string, manifestRoutes: Set<string>): boolean {
  if (NEVER_CACHE.some((prefix) => route.startsWith(prefix))) return false;
  return manifestRoutes.has(route);
}

export async function precache(
  cache: { put(route: string, response: Response): Promise<void> },
  entries: ManifestEntry[],
  fetchFn: typeof fetch,
): Promise<number> {
  let cached = 0;
  for (const entry of entries) {
    const response = await fetchFn(entry.route);
    if (response.ok) {
      await cache.put(entry.route, response);
      cached += 1;
    }
  }
  return cached;
}

/** Network first; cached copy when the network is unavailable. */
export async function respond(
  route: string,
  cache: { match(route: string): Promise<Response | undefined> },
  fetchFn: typeof fetch,
): Promise<Response> {
  try {
    return await fetchFn(route);
  } catch {
    const cached = await cache.match(route);
    if (cached) return cached;
    return new Response("offline and not cached", { status: 503 });
  }
}
