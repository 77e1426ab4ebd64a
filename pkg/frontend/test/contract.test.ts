/**
 * UI contract suite against the mocked service: hierarchy isomorphism on
 * the captured fixture, the rejection-to-link-picker flow, and the
 * font-scale/display-weight identity.
 */

import { describe, expect, it } from "vitest";

import { Api } from "../src/api.js";
import { App } from "../src/app.js";
import { displayWeight } from "../src/displayWeight.js";
import {
  fontStyle,
  renderApp,
  renderArgumentation,
  renderDraft,
  renderHierarchy,
} from "../src/render.js";
import { buildTree, treeEdges } from "../src/state.js";
import { MockService } from "./mockService.js";

import hierarchyFixture from "./fixtures/hierarchy.json";
import argumentationFixture from "./fixtures/argumentation.json";

const DOCUMENTED_ENDPOINTS = new Set([
  "health", "hierarchy", "scores", "argumentation", "neighborhood",
  "rate", "submit-statement", "query", "remove-statement",
]);

async function loadedApp(mock = new MockService()) {
  const app = new App(new Api("http://mock", mock.fetchLike()));
  await app.load();
  return { app, mock };
}

describe("hierarchy rendering", () => {
  it("is edge-isomorphic to the hierarchy payload", () => {
    const tree = buildTree(hierarchyFixture as never);
    const fromTree = treeEdges(tree).map((e) => e.join(">")).sort();
    const fromPayload = (hierarchyFixture.edges as [string, string][])
      .map((e) => e.join(">"))
      .sort();
    expect(fromTree).toEqual(fromPayload);
  });

  it("renders the corpus subtype placement", async () => {
    const { app } = await loadedApp();
    // expand everything so every object is visible
    const expandAll = (id: string) => app.state.expanded.add(id);
    Object.keys(hierarchyFixture.objects).forEach(expandAll);
    const html = renderHierarchy(app.state);
    const validation = Object.entries(hierarchyFixture.objects).find(
      ([, o]) => o.text === "p#information_validation",
    )![0];
    const reviewing = Object.entries(hierarchyFixture.objects).find(
      ([, o]) => o.text === "p#peer_reviewing",
    )![0];
    const edge = (hierarchyFixture.edges as [string, string][]).find(
      ([c, p]) => c === reviewing && p === validation,
    );
    expect(edge).toBeDefined();
    expect(html).toContain(`data-id="${reviewing}"`);
    expect(html).toContain(`data-id="${validation}"`);
  });

  it("shows an explicit notice when the filter hides everything", async () => {
    const { app } = await loadedApp();
    const top = Math.max(
      ...Object.values(app.state.scores!.statements), 0);
    app.setFilter(top + 1);
    // statements are hidden; terms remain, so pick a statement-only branch
    const html = renderHierarchy(app.state);
    for (const [id, meta] of Object.entries(hierarchyFixture.objects)) {
      if (meta.kind === "statement") {
        expect(html).not.toContain(`data-id="${id}"`);
      }
    }
  });
});

describe("font scale", () => {
  it("maps -1/0/+1 to 0.5/1.0/2.0", () => {
    expect(displayWeight(-1)).toBe(0.5);
    expect(displayWeight(0)).toBe(1.0);
    expect(displayWeight(1)).toBe(2.0);
  });

  it("equals displayWeight(score) for every rendered statement", async () => {
    const { app } = await loadedApp();
    Object.keys(hierarchyFixture.objects).forEach((id) =>
      app.state.expanded.add(id));
    await app.showDetail((argumentationFixture as { id: string }).id);
    const html = renderHierarchy(app.state) +
      renderArgumentation(app.state, app.state.detail!.argumentation);
    const matches = [...html.matchAll(
      /data-id="([0-9a-f]{64})" style="font-size:([\d.]+)em"/g)];
    expect(matches.length).toBeGreaterThan(3);
    for (const [, id, size] of matches) {
      const score = app.state.scores!.statements[id] ?? 0;
      expect(Number(size)).toBeCloseTo(displayWeight(score), 4);
    }
  });

  it("reflects a fresh rating after rate-and-refresh", async () => {
    const { app } = await loadedApp();
    const id = (argumentationFixture as { id: string }).id;
    await app.showDetail(id);
    const before = renderArgumentation(app.state, app.state.detail!.argumentation);
    expect(before).toContain(fontStyle(0.6));
    await app.rate(id, "veracity", -1);
    const after = renderArgumentation(app.state, app.state.detail!.argumentation);
    expect(after).toContain(fontStyle(-1));
  });
});

describe("argumentation pane", () => {
  it("is structure-isomorphic to the endpoint payload", async () => {
    const { app } = await loadedApp();
    await app.showDetail((argumentationFixture as { id: string }).id);
    const html = renderArgumentation(app.state, app.state.detail!.argumentation);
    const payload = argumentationFixture as {
      links: { link_id: string; kind: string; meta: { kind: string }[] }[];
    };
    for (const link of payload.links) {
      expect(html).toContain(`data-link="${link.link_id}"`);
      expect(html).toContain(`class="link kind-${link.kind}"`);
    }
    const objection = payload.links.find((l) => l.kind === "objection")!;
    // the objection on the USE of the objection renders as a badge on the
    // edge, not as a statement node
    expect(objection.meta.length).toBe(1);
    expect(html).toContain(`class="edge-badge kind-objection"`);
  });
});

describe("guided corrective editing", () => {
  const rejection = {
    class: "protocol-violation",
    code: "missing-corrective-link",
    message: "the editing protocol rejected this change",
    conflicts: ["a".repeat(64)],
  };

  it("opens the link picker preselecting the conflicting statement", async () => {
    const mock = new MockService({ submitRejection: rejection });
    const { app } = await loadedApp(mock);
    app.editDraft("fl", "every p#man p#part: at least 3 p#leg");
    const ok = await app.submitDraft();
    expect(ok).toBe(false);
    expect(app.state.pickerConflicts).toEqual(rejection.conflicts);
    expect(app.state.draft.linkTarget).toBe(rejection.conflicts[0]);
    expect(app.state.draft.linkKind).toBe("objection");
    const html = renderDraft(app.state);
    expect(html).toContain("link-picker");
    expect(html).toContain(`<option value="${rejection.conflicts[0]}" selected>`);

    // resubmitting with the chosen link goes through with that link attached
    const ok2 = await app.submitDraft();
    expect(ok2).toBe(true);
    expect(mock.accepted.length).toBe(1);
    expect(mock.accepted[0].links).toEqual([
      { kind: "objection", target: rejection.conflicts[0], meta: [] },
    ]);
    expect(app.state.pickerConflicts).toBeNull();
  });

  it("renders syntax errors inline at the reported column", async () => {
    const mock = new MockService({
      submitRejection: {
        class: "syntax-error",
        code: "fl-syntax",
        message: "unexpected eof",
        line: 1,
        column: 16,
      },
    });
    const { app } = await loadedApp(mock);
    app.editDraft("fl", "a p#man p#part:");
    await app.submitDraft();
    const html = renderDraft(app.state);
    expect(html).toContain("error-syntax");
    expect(html).toContain("column 16");
    expect(html).toContain(" ".repeat(15) + "^");
  });

  it("renders the four error classes distinctly", async () => {
    for (const cls of ["transport-error", "protocol-violation", "not-found"]) {
      const mock = new MockService({
        submitRejection: {
          class: cls, code: "x", message: "m",
        },
      });
      const { app } = await loadedApp(mock);
      app.editDraft("fl", "a p#man");
      await app.submitDraft();
      expect(renderDraft(app.state)).toContain(`error-${cls}`);
    }
  });
});

describe("offline behavior", () => {
  it("banners and queues edits instead of losing them", async () => {
    const mock = new MockService();
    const { app } = await loadedApp(mock);
    mock.options.offline = true;
    app.editDraft("fl", "a p#cat");
    const ok = await app.submitDraft();
    expect(ok).toBe(false);
    expect(app.state.banner?.kind).toBe("queued");
    expect(app.state.queued.length).toBe(1);

    mock.options.offline = false;
    await app.flushQueue();
    expect(mock.accepted.map((a) => a.fl)).toEqual(["a p#cat"]);
    expect(app.state.queued.length).toBe(0);
  });

  it("banners when the service is unreachable at load", async () => {
    const mock = new MockService({ offline: true });
    const app = new App(new Api("http://mock", mock.fetchLike()));
    await app.load();
    expect(app.state.banner?.kind).toBe("offline");
    expect(renderApp(app.state)).toContain("banner-offline");
  });
});

describe("endpoint discipline", () => {
  it("only ever talks to documented endpoints", async () => {
    const mock = new MockService();
    const { app } = await loadedApp(mock);
    await app.showDetail((argumentationFixture as { id: string }).id);
    await app.toggle(hierarchyFixture.root);
    app.editDraft("fl", "a p#cat");
    await app.submitDraft();
    await app.rate((argumentationFixture as { id: string }).id, "veracity", 0.5);
    for (const call of mock.calls) {
      expect(DOCUMENTED_ENDPOINTS.has(call.endpoint)).toBe(true);
    }
  });
});
