/**
 * Pure rendering: state in, HTML strings out.  Every rendered statement's
 * font size is exactly displayWeight(score); objections on links render
 * as badges on the edge, visually distinct from objections on statements.
 */

import type { ArgumentationPayload, LinkView } from "./api.js";
import { displayWeight } from "./displayWeight.js";
import type { AppState, TreeNode } from "./state.js";
import { filteredOut, scoreOf } from "./state.js";

export function escapeHtml(text: string): string {
  return text
    .replace(/&/g, "&amp;")
    .replace(/</g, "&lt;")
    .replace(/>/g, "&gt;")
    .replace(/"/g, "&quot;");
}

export function fontStyle(score: number): string {
  return `font-size:${displayWeight(score).toFixed(4)}em`;
}

// ---------------------------------------------------------------------------
// hierarchy pane

export function renderHierarchy(state: AppState): string {
  if (!state.tree) {
    return `<p class="empty">no knowledge base loaded</p>`;
  }
  const body = renderNode(state, state.tree);
  const anyVisible = body.includes("data-id");
  if (!anyVisible) {
    return `<p class="filtered-notice">everything below the root is filtered out ` +
      `(min usefulness ${state.minUsefulness})</p>`;
  }
  return `<ul class="hierarchy">${body}</ul>`;
}

function renderNode(state: AppState, node: TreeNode): string {
  if (filteredOut(state, node)) {
    return "";
  }
  const open = state.expanded.has(node.id);
  const style = node.kind === "statement" ? ` style="${fontStyle(scoreOf(state, node.id))}"` : "";
  const toggle = node.children.length
    ? `<button class="toggle" data-toggle="${node.id}">${open ? "−" : "+"}</button>`
    : `<span class="leaf-dot">·</span>`;
  const label =
    `<span class="obj kind-${node.kind}" data-id="${node.id}"${style}>` +
    `${escapeHtml(node.text)}</span>`;
  const kids = open && node.children.length
    ? `<ul>${node.children.map((c) => renderNode(state, c)).join("")}</ul>`
    : "";
  return `<li>${toggle} ${label}${kids}</li>`;
}

// ---------------------------------------------------------------------------
// statement detail / argumentation pane

export function renderDetail(state: AppState): string {
  if (!state.detail) {
    return `<p class="empty">select a statement</p>`;
  }
  return renderArgumentation(state, state.detail.argumentation);
}

export function renderArgumentation(state: AppState, node: ArgumentationPayload): string {
  const score = scoreOf(state, node.id);
  const head =
    `<div class="stmt" data-id="${node.id}" style="${fontStyle(score)}">` +
    `${escapeHtml(node.text)} <span class="author">by ${escapeHtml(node.author)}</span>` +
    `<span class="controls" data-rate="${node.id}"></span></div>`;
  const links = node.links.map((l) => renderLink(state, l)).join("");
  return `<div class="argumentation">${head}${links}</div>`;
}

function renderLink(state: AppState, link: LinkView): string {
  const badges = link.meta
    .map(
      (m) =>
        `<span class="edge-badge kind-${m.kind}" title="on the link itself, ` +
        `not on its destination">${m.kind} by ${escapeHtml(m.author)}: ` +
        `${escapeHtml(m.source.text)}</span>`,
    )
    .join("");
  return (
    `<div class="link kind-${link.kind}" data-link="${link.link_id}">` +
    `<span class="edge-label">${link.kind} by ${escapeHtml(link.author)}</span>` +
    badges +
    renderArgumentation(state, link.source) +
    `</div>`
  );
}

// ---------------------------------------------------------------------------
// draft editor with the guided corrective-link picker

const LINK_KINDS = [
  "objection",
  "correction",
  "corrective_precision",
  "corrective_generalization",
  "restrictive_correction",
  "argument",
];

export function renderDraft(state: AppState): string {
  const err = state.draftError;
  let errorHtml = "";
  if (err) {
    if (err.class === "syntax-error") {
      const pointer = err.column ? " ".repeat(Math.max(0, err.column - 1)) + "^" : "";
      errorHtml =
        `<pre class="error error-syntax">line ${err.line}, column ${err.column}: ` +
        `${escapeHtml(err.message)}\n${escapeHtml(state.draft.fl)}\n${pointer}</pre>`;
    } else {
      errorHtml =
        `<p class="error error-${err.class}">` +
        `${escapeHtml(err.class)}/${escapeHtml(err.code)}: ${escapeHtml(err.message)}</p>`;
    }
  }
  let picker = "";
  if (state.pickerConflicts) {
    const options = state.pickerConflicts
      .map(
        (id) =>
          `<option value="${id}"${id === state.draft.linkTarget ? " selected" : ""}>` +
          `${shortId(id)} ${escapeHtml(conflictText(state, id))}</option>`,
      )
      .join("");
    const kinds = LINK_KINDS.map(
      (k) =>
        `<option value="${k}"${k === state.draft.linkKind ? " selected" : ""}>${k}</option>`,
    ).join("");
    picker =
      `<div class="link-picker">` +
      `<p>this disagrees with existing knowledge; say how:</p>` +
      `<select data-field="linkKind">${kinds}</select>` +
      `<select data-field="linkTarget">${options}</select>` +
      `</div>`;
  }
  return (
    `<div class="draft">` +
    `<textarea data-field="fl">${escapeHtml(state.draft.fl)}</textarea>` +
    errorHtml +
    picker +
    `<button data-action="submit">submit as ${escapeHtml(state.draft.user)}</button>` +
    `</div>`
  );
}

function conflictText(state: AppState, id: string): string {
  return state.hierarchy?.objects[id]?.text ?? "";
}

function shortId(id: string): string {
  return id.slice(0, 10);
}

export function renderBanner(state: AppState): string {
  if (!state.banner) {
    return "";
  }
  return `<div class="banner banner-${state.banner.kind}">${escapeHtml(
    state.banner.text,
  )}</div>`;
}

export function renderApp(state: AppState): string {
  return (
    renderBanner(state) +
    `<main><section id="hierarchy">${renderHierarchy(state)}</section>` +
    `<section id="detail">${renderDetail(state)}</section>` +
    `<section id="editor">${renderDraft(state)}</section></main>`
  );
}
