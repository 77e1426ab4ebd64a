/** DOM bootstrap: event delegation over the rendered strings. */

import { Api } from "./api.js";
import { App } from "./app.js";
import { renderApp } from "./render.js";

const base = (window as unknown as { NEXUSKB_BASE?: string }).NEXUSKB_BASE ??
  "http://127.0.0.1:7341";
const app = new App(new Api(base));
const rootEl = document.getElementById("app")!;

function paint(): void {
  rootEl.innerHTML = renderApp(app.state);
}

rootEl.addEventListener("click", (ev) => {
  const el = ev.target as HTMLElement;
  const toggleId = el.getAttribute("data-toggle");
  if (toggleId) {
    void app.toggle(toggleId).then(paint);
    return;
  }
  const objId = el.getAttribute("data-id");
  if (objId && el.classList.contains("kind-statement")) {
    void app.showDetail(objId).then(paint);
    return;
  }
  if (el.getAttribute("data-action") === "submit") {
    void app.submitDraft().then(paint);
  }
});

rootEl.addEventListener("change", (ev) => {
  const el = ev.target as HTMLInputElement | HTMLSelectElement;
  const field = el.getAttribute("data-field");
  if (field === "fl" || field === "linkKind" || field === "linkTarget") {
    app.editDraft(field, el.value);
  }
});

window.addEventListener("online", () => {
  void app.flushQueue().then(paint);
});

void app.load().then(paint);
