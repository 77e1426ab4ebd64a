/**
 * View model and its pure transitions.  The service owns the truth; this
 * state is always refetchable, so every field mirrors endpoint payloads
 * plus purely local UI concerns (expansion, drafts, banners, the offline
 * queue).
 */

import type {
  ArgumentationPayload,
  ErrorBody,
  HierarchyPayload,
  ScoresPayload,
} from "./api.js";

export interface TreeNode {
  id: string;
  kind: string;
  text: string;
  author: string;
  children: TreeNode[];
}

export interface Draft {
  user: string;
  fl: string;
  linkKind: string | null;
  linkTarget: string | null;
}

export interface Banner {
  kind: "offline" | "queued" | "error" | "info";
  text: string;
  errorClass?: string;
}

export interface QueuedEdit {
  draft: Draft;
}

export interface AppState {
  tree: TreeNode | null;
  hierarchy: HierarchyPayload | null;
  expanded: Set<string>;
  minUsefulness: number | null;
  scores: ScoresPayload | null;
  detail: { id: string; argumentation: ArgumentationPayload } | null;
  draft: Draft;
  draftError: ErrorBody | null;
  pickerConflicts: string[] | null;
  banner: Banner | null;
  queued: QueuedEdit[];
}

export function initialState(user = "p"): AppState {
  return {
    tree: null,
    hierarchy: null,
    expanded: new Set(),
    minUsefulness: null,
    scores: null,
    detail: null,
    draft: { user, fl: "", linkKind: null, linkTarget: null },
    draftError: null,
    pickerConflicts: null,
    banner: null,
    queued: [],
  };
}

/** The hierarchy payload as a tree rooted at the payload's root: every
 * stored child->parent edge appears exactly once (an object with several
 * generalizations shows under each of them). */
export function buildTree(payload: HierarchyPayload): TreeNode {
  const childrenOf = new Map<string, string[]>();
  for (const [child, parent] of payload.edges) {
    const bucket = childrenOf.get(parent) ?? [];
    bucket.push(child);
    childrenOf.set(parent, bucket);
  }
  const make = (id: string): TreeNode => {
    const meta = payload.objects[id] ?? { kind: "?", author: "?", text: id };
    const kids = (childrenOf.get(id) ?? [])
      .slice()
      .sort((a, b) => {
        const ta = payload.objects[a]?.text ?? a;
        const tb = payload.objects[b]?.text ?? b;
        return ta < tb ? -1 : ta > tb ? 1 : a < b ? -1 : 1;
      })
      .map(make);
    return { id, kind: meta.kind, text: meta.text, author: meta.author, children: kids };
  };
  return make(payload.root);
}

export function treeEdges(node: TreeNode): [string, string][] {
  const out: [string, string][] = [];
  const walk = (n: TreeNode) => {
    for (const child of n.children) {
      out.push([child.id, n.id]);
      walk(child);
    }
  };
  walk(node);
  return out;
}

export function setHierarchy(state: AppState, payload: HierarchyPayload): void {
  state.hierarchy = payload;
  state.tree = buildTree(payload);
  state.expanded.add(payload.root);
}

export function toggleExpanded(state: AppState, id: string): void {
  if (state.expanded.has(id)) {
    state.expanded.delete(id);
  } else {
    state.expanded.add(id);
  }
}

export function scoreOf(state: AppState, id: string): number {
  return state.scores?.statements[id] ?? 0;
}

/** Statements filtered away by the usefulness threshold (terms always
 * render: the filter is about statements' scores). */
export function filteredOut(state: AppState, node: TreeNode): boolean {
  if (state.minUsefulness === null || node.kind !== "statement") {
    return false;
  }
  return scoreOf(state, node.id) < state.minUsefulness;
}

/** A protocol rejection drives the guided flow: a missing corrective
 * link opens the picker with the reported conflict preselected. */
export function applyRejection(state: AppState, err: ErrorBody): void {
  state.draftError = err;
  if (err.class === "protocol-violation" && err.code === "missing-corrective-link") {
    const conflicts = err.conflicts ?? [];
    state.pickerConflicts = conflicts;
    state.draft.linkKind = state.draft.linkKind ?? "objection";
    if (conflicts.length > 0) {
      state.draft.linkTarget = conflicts[0];
    }
  }
}

export function clearDraft(state: AppState): void {
  state.draft = { ...state.draft, fl: "", linkKind: null, linkTarget: null };
  state.draftError = null;
  state.pickerConflicts = null;
}

export function queueEdit(state: AppState): void {
  state.queued.push({ draft: { ...state.draft } });
  state.banner = {
    kind: "queued",
    text: `offline: ${state.queued.length} edit(s) queued, nothing lost`,
  };
}
