/**
 * Typed client over the service endpoints.  The fetch implementation is
 * injectable so the contract suite can run against a scripted mock; the
 * UI never touches state except through these calls.
 */

export interface ErrorBody {
  class: string;
  code: string;
  message: string;
  conflicts?: string[];
  ids?: string[];
  line?: number;
  column?: number;
  expectation?: string;
}

export class ServiceError extends Error {
  constructor(readonly body: ErrorBody) {
    super(body.message);
  }
}

export class OfflineError extends Error {
  constructor(readonly cause_: unknown) {
    super("service unreachable");
  }
}

export interface CorrectiveLink {
  kind: string;
  target: string;
  meta: CorrectiveLink[];
}

export interface HierarchyPayload {
  root: string;
  objects: Record<string, { kind: string; author: string; text: string }>;
  edges: [string, string][];
}

export interface ScoresPayload {
  statements: Record<string, number>;
  users: Record<string, number>;
  iterations: number;
  converged: boolean;
  as_of_seq: number;
}

export interface LinkView {
  link_id: string;
  kind: string;
  author: string;
  source: ArgumentationPayload;
  meta: LinkView[];
}

export interface ArgumentationPayload {
  id: string;
  author: string;
  text: string;
  links: LinkView[];
}

export interface QueryRow {
  id: string;
  fl: string;
  author: string;
  owner: string;
  score?: number;
}

export type FetchLike = (url: string, init?: RequestInit) => Promise<Response>;

export class Api {
  constructor(
    private readonly base: string,
    private readonly fetchImpl: FetchLike = (u, i) => fetch(u, i),
  ) {}

  private async call(
    endpoint: string,
    body?: Record<string, unknown>,
    method: "GET" | "POST" = "POST",
  ): Promise<unknown> {
    let resp: Response;
    try {
      resp = await this.fetchImpl(`${this.base}/api/${endpoint}`, {
        method,
        headers: body ? { "Content-Type": "application/json" } : undefined,
        body: body ? JSON.stringify(body) : undefined,
      });
    } catch (err) {
      throw new OfflineError(err);
    }
    const payload = (await resp.json()) as Record<string, unknown>;
    if (!resp.ok) {
      throw new ServiceError((payload as { error: ErrorBody }).error);
    }
    return payload;
  }

  health(): Promise<{ status: string; node: string; seq: number }> {
    return this.call("health", undefined, "GET") as never;
  }

  hierarchy(): Promise<HierarchyPayload> {
    return this.call("hierarchy", undefined, "GET") as never;
  }

  scores(): Promise<ScoresPayload> {
    return this.call("scores", undefined, "GET") as never;
  }

  submit(user: string, fl: string, links: CorrectiveLink[] = []): Promise<{
    status: string;
    id: string;
    canonical: string;
  }> {
    return this.call("submit-statement", { user, fl, links }) as never;
  }

  rate(user: string, object: string, criterion: string, value: number) {
    return this.call("rate", { user, object, criterion, value });
  }

  query(body: Record<string, unknown>): Promise<{
    results: QueryRow[];
    edges: [string, string][];
  }> {
    return this.call("query", body) as never;
  }

  argumentation(id: string): Promise<ArgumentationPayload> {
    return this.call("argumentation", { id }) as never;
  }

  neighborhood(id: string, depth: number): Promise<{
    objects: { id: string; kind: string; text: string }[];
    edges: [string, string, string][];
  }> {
    return this.call("neighborhood", { id, depth }) as never;
  }
}
