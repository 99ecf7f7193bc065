// Typed client for the studio gateway. All prompt text shown in the UI comes
// from these responses; the client never assembles prompts locally.

export interface Bilingual {
  zh: string;
  en: string;
}

export interface TagOption {
  option_id: string;
  label: Bilingual;
  specification_text: string;
  conflict_terms: string[];
}

export interface TagCategory {
  category_id: string;
  name: Bilingual;
  selection_rule: "exactly-one" | "at-most-one";
  applicability: "all-views" | "interior-only";
  options: TagOption[];
}

export interface Site {
  site_id: string;
  names: Bilingual;
  cluster: string;
  functions: string[];
  style: string;
  window_features: string[];
  conservation_status: string;
  descriptions: Bilingual;
  base_rendering_ref: string;
}

export interface KnowledgeSection {
  section_id: string;
  title: Bilingual;
  body: Bilingual;
  narration: Bilingual;
  sites: string[];
  categories: string[];
}

export interface Violation {
  tier: number;
  rule_id: string;
  span: [number, number];
  resolution: "Removed" | "Replaced" | "Relocated" | "Overridden-by-tag";
  explanation: Bilingual;
  alternatives: { en: string[]; zh: string[] };
}

export interface Outcome {
  status: "Accepted" | "Normalized";
  violations: Violation[];
  normalized_idea: string;
  provenance_trace: string[];
}

export interface PromptClause {
  text: string;
  origin: string;
}

export interface ValidateResponse {
  outcome: Outcome;
  scaffolded_prompt: { rendered: string; structured: PromptClause[] };
}

export interface GenerateResponse {
  job_id: string;
  creation_id: number;
  seed: number;
  corrected: boolean;
  prompt: string;
  violations: Violation[];
}

export interface Job {
  job_id: string;
  status: "Queued" | "Running" | "Done" | "Failed";
  image_ids: string[];
  failure_reason: string;
}

export interface IterationView {
  theme: string;
  final_prompt: string;
  image_ids: string[];
  job_id: string;
}

export interface CreationView {
  creation_id: number;
  session_id: string;
  theme: string;
  saved_image_ids: string[];
  iterations: IterationView[];
}

export interface ManifestEntry {
  route: string;
  content_hash: string;
  byte_size: number;
}

export interface PersonaTurn {
  role: string;
  text: string;
  cited_concept_ids: string[];
  grounded: boolean;
}

export class ApiError extends Error {
  constructor(
    public code: string,
    public bilingual: Bilingual,
    public status: number,
  ) {
    super(bilingual.en || bilingual.zh);
  }
}

async function unwrap<T>(response: Response): Promise<T> {
  if (response.ok) {
    return (await response.json()) as T;
  }
  let code = "bad_request";
  let message: Bilingual = { zh: "请求失败", en: "request failed" };
  try {
    const body = await response.json();
    if (body.error) {
      code = body.error.code;
      message = body.error.message;
    }
  } catch {
    // non-JSON error body; keep the generic message
  }
  throw new ApiError(code, message, response.status);
}

export class StudioApi {
  constructor(
    private base: string = "",
    private fetchFn: typeof fetch = (...args) => fetch(...args),
  ) {}

  private get(path: string) {
    return this.fetchFn(this.base + "/api/v1" + path);
  }

  private post(path: string, body: unknown) {
    return this.fetchFn(this.base + "/api/v1" + path, {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify(body),
    });
  }

  async listSites(): Promise<Site[]> {
    return (await unwrap<{ sites: Site[] }>(await this.get("/sites"))).sites;
  }

  async listCategories(): Promise<TagCategory[]> {
    const body = await unwrap<{ categories: TagCategory[] }>(
      await this.get("/taxonomy/categories"),
    );
    return body.categories;
  }

  async knowledge(sectionId: string): Promise<KnowledgeSection> {
    return unwrap(await this.get(`/knowledge/${sectionId}`));
  }

  async personaChat(question: string, lang: string): Promise<PersonaTurn> {
    return unwrap(await this.post("/persona/chat", { question, lang }));
  }

  async createSession(language: string): Promise<string> {
    const body = await unwrap<{ session_id: string }>(
      await this.post("/sessions", { language, participant_label: "" }),
    );
    return body.session_id;
  }

  async validate(req: {
    theme: string;
    tags: Record<string, string>;
    interior?: boolean;
    site_id: string;
    idea: string;
  }): Promise<ValidateResponse> {
    return unwrap(await this.post("/guardrails/validate", req));
  }

  async generate(req: {
    session_id: string;
    theme: string;
    tags: Record<string, string>;
    interior?: boolean;
    site_id: string;
    confirmed_prompt: string;
    idea?: string;
    parent_image_id?: string;
    creation_id?: number;
  }): Promise<GenerateResponse> {
    return unwrap(await this.post("/generate", req));
  }

  async job(jobId: string): Promise<Job> {
    return unwrap(await this.get(`/jobs/${jobId}`));
  }

  imageUrl(imageId: string): string {
    return `${this.base}/api/v1/images/${imageId}`;
  }

  async creations(sessionId: string): Promise<CreationView[]> {
    const body = await unwrap<{ creations: CreationView[] }>(
      await this.get(`/sessions/${sessionId}/creations`),
    );
    return body.creations;
  }

  async saveImage(sessionId: string, creationId: number, imageId: string): Promise<void> {
    await unwrap(
      await this.post(`/sessions/${sessionId}/iterations/save-image`, {
        creation_id: creationId,
        image_id: imageId,
      }),
    );
  }

  exhibitCardUrl(sessionId: string, creationId: number, imageId: string): string {
    const query = imageId ? `?image_id=${encodeURIComponent(imageId)}` : "";
    return `${this.base}/api/v1/sessions/${sessionId}/creations/${creationId}/exhibit-card${query}`;
  }

  async offlineManifest(): Promise<ManifestEntry[]> {
    const body = await unwrap<{ entries: ManifestEntry[] }>(
      await this.get("/offline-manifest"),
    );
    return body.entries;
  }
}
