/**
 * The controller: every user intention becomes documented endpoint calls
 * plus pure state transitions; no other side channel exists.  Mutations
 * go one at a time; reads may overlap.
 */

import { Api, OfflineError, ServiceError } from "./api.js";
import type { CorrectiveLink } from "./api.js";
import {
  AppState,
  applyRejection,
  clearDraft,
  initialState,
  queueEdit,
  setHierarchy,
  toggleExpanded,
} from "./state.js";

export class App {
  readonly state: AppState;
  private busy = false;

  constructor(private readonly api: Api, user = "p") {
    this.state = initialState(user);
  }

  async load(): Promise<void> {
    try {
      const [hierarchy, scores] = await Promise.all([
        this.api.hierarchy(),
        this.api.scores(),
      ]);
      setHierarchy(this.state, hierarchy);
      this.state.scores = scores;
      this.state.banner = null;
    } catch (err) {
      if (err instanceof OfflineError) {
        this.state.banner = { kind: "offline", text: "service unreachable" };
        return;
      }
      throw err;
    }
  }

  async toggle(id: string): Promise<void> {
    toggleExpanded(this.state, id);
    if (this.state.expanded.has(id)) {
      // expansion explores the neighborhood; failures only banner
      try {
        await this.api.neighborhood(id, 1);
      } catch (err) {
        if (!(err instanceof OfflineError)) throw err;
        this.state.banner = { kind: "offline", text: "service unreachable" };
      }
    }
  }

  async showDetail(id: string): Promise<void> {
    const argumentation = await this.api.argumentation(id);
    this.state.detail = { id, argumentation };
  }

  setFilter(minUsefulness: number | null): void {
    this.state.minUsefulness = minUsefulness;
  }

  editDraft(field: "fl" | "linkKind" | "linkTarget", value: string): void {
    if (field === "fl") {
      this.state.draft.fl = value;
    } else {
      this.state.draft[field] = value || null;
    }
  }

  private draftLinks(): CorrectiveLink[] {
    const { linkKind, linkTarget } = this.state.draft;
    if (linkKind && linkTarget) {
      return [{ kind: linkKind, target: linkTarget, meta: [] }];
    }
    return [];
  }

  async submitDraft(): Promise<boolean> {
    if (this.busy) {
      return false;
    }
    this.busy = true;
    try {
      await this.api.submit(
        this.state.draft.user,
        this.state.draft.fl,
        this.draftLinks(),
      );
      clearDraft(this.state);
      this.state.banner = { kind: "info", text: "accepted" };
      await this.load();
      if (this.state.detail) {
        await this.showDetail(this.state.detail.id);
      }
      return true;
    } catch (err) {
      if (err instanceof ServiceError) {
        applyRejection(this.state, err.body);
        return false;
      }
      if (err instanceof OfflineError) {
        queueEdit(this.state);
        return false;
      }
      throw err;
    } finally {
      this.busy = false;
    }
  }

  async flushQueue(): Promise<void> {
    const queued = this.state.queued.splice(0);
    for (const item of queued) {
      this.state.draft = { ...item.draft };
      await this.submitDraft();
    }
    if (this.state.queued.length === 0 && this.state.banner?.kind === "queued") {
      this.state.banner = null;
    }
  }

  /** Rate, then refetch scores so the next render's emphasis reflects
   * the new fixed point. */
  async rate(id: string, criterion: string, value: number): Promise<void> {
    await this.api.rate(this.state.draft.user, id, criterion, value);
    this.state.scores = await this.api.scores();
  }
}
