/** DOM wiring: progress header, sentence card, label buttons, scheme panel. */

import { ApiClient, Agreement, ApiError, LabelValue } from "./api.js";
import { KEY_BINDINGS, keyForLabel, labelForKey } from "./keyboard.js";
import { CATEGORIES, SCHEME_INTRO } from "./scheme.js";
import { Labeler, UiState } from "./state.js";

function el<K extends keyof HTMLElementTagNameMap>(
  tag: K,
  className?: string,
  text?: string,
): HTMLElementTagNameMap[K] {
  const node = document.createElement(tag);
  if (className) node.className = className;
  if (text !== undefined) node.textContent = text;
  return node;
}

function schemePanel(): HTMLElement {
  const panel = el("aside", "scheme");
  panel.append(el("h2", undefined, "Labeling scheme"));
  panel.append(el("p", "scheme-intro", SCHEME_INTRO));
  for (const category of CATEGORIES) {
    const block = el("section", `scheme-${category.value}`);
    block.append(el("h3", undefined, `${category.title} (key ${keyForLabel(category.value)})`));
    const list = el("ul");
    for (const point of category.points) list.append(el("li", undefined, point));
    block.append(list);
    panel.append(block);
  }
  return panel;
}

function render(root: HTMLElement, labeler: Labeler, state: UiState): void {
  const progress = root.querySelector(".progress") as HTMLElement;
  const card = root.querySelector(".card") as HTMLElement;
  const banner = root.querySelector(".banner") as HTMLElement;
  const buttons = root.querySelectorAll<HTMLButtonElement>(".labels button");

  banner.textContent = state.banner ?? "";
  banner.hidden = state.banner === null;

  if (state.view === null) {
    progress.textContent = "loading session…";
    card.textContent = "";
    return;
  }
  const view = state.view;
  const counts = view.label_counts;
  progress.textContent =
    `${view.session_id} · ${view.labeled} / ${view.total} labeled · ` +
    `helpful ${counts.helpful} · harmful ${counts.harmful} · neither ${counts.neither}`;

  if (view.next === undefined) {
    card.textContent = "Session complete. Thank you.";
    card.classList.add("done");
  } else {
    card.textContent = view.next.sentence_text;
    card.classList.remove("done");
  }
  for (const button of buttons) {
    button.disabled = state.pending || labeler.complete;
  }
}

async function showAgreement(api: ApiClient, target: HTMLElement): Promise<void> {
  try {
    const result: Agreement = await api.agreement("A", "B");
    target.textContent = `kappa ${result.kappa.toFixed(4)} over ${result.n_items} items`;
  } catch (err) {
    target.textContent = err instanceof ApiError ? err.message : String(err);
  }
}

export function boot(root: HTMLElement, api: ApiClient, sessionId: string): Labeler {
  const main = el("main", "annotator");
  const progress = el("div", "progress");
  const banner = el("div", "banner");
  banner.hidden = true;
  const card = el("blockquote", "card");
  const labels = el("div", "labels");
  const agreementRow = el("div", "agreement");

  const labeler = new Labeler(api, sessionId, (state) => render(main, labeler, state));

  for (const [key, value] of KEY_BINDINGS) {
    const button = el("button", `label-${value}`, `${value} (${key})`);
    button.addEventListener("click", () => void labeler.label(value));
    labels.append(button);
  }

  const agreementButton = el("button", "agreement-check", "check agreement A/B");
  const agreementOut = el("span", "agreement-result");
  agreementButton.addEventListener("click", () => void showAgreement(api, agreementOut));
  agreementRow.append(agreementButton, agreementOut);

  main.append(progress, banner, card, labels, agreementRow);
  root.append(main, schemePanel());

  document.addEventListener("keydown", (event) => {
    const label = labelForKey(event.key);
    if (label !== null && !event.repeat) void labeler.label(label);
  });

  void labeler.load();
  return labeler;
}

if (typeof document !== "undefined") {
  const root = document.getElementById("app");
  if (root !== null) {
    const session = new URLSearchParams(window.location.search).get("session") ?? "A";
    boot(root, new ApiClient(""), session);
  }
}
