import { ApiClient, isAbortError } from "./api.js";
import {
  canSubmit,
  detailClosed,
  detailOpened,
  initialState,
  searchFailed,
  searchSucceeded,
  setK,
  setQuery,
  submitStarted,
  toggleCaption,
} from "./state.js";
import { sparklineSvg } from "./sparkline.js";
import type { QueryViewState } from "./types.js";

const api = new ApiClient();
let state: QueryViewState = initialState();

function update(next: QueryViewState): void {
  state = next;
  render();
}

function esc(text: string): string {
  const div = document.createElement("div");
  div.textContent = text;
  return div.innerHTML;
}

async function submit(): Promise<void> {
  if (!canSubmit(state)) return;
  const { query, k } = state;
  update(submitStarted(state));
  try {
    update(searchSucceeded(state, await api.search(query.trim(), k)));
  } catch (err) {
    if (!isAbortError(err)) {
      update(searchFailed(state, err instanceof Error ? err.message : String(err)));
    }
  }
}

async function openDetail(id: string): Promise<void> {
  try {
    update(detailOpened(state, await api.signal(id)));
  } catch (err) {
    update(searchFailed(state, err instanceof Error ? err.message : String(err)));
  }
}

function render(): void {
  const root = document.getElementById("app");
  if (!root) return;

  const cards = state.results
    .map(
      (r) => `
      <div class="card" data-id="${esc(r.id)}">
        <div class="card-head"><span class="id">${esc(r.id)}</span><span class="score">${r.score}</span></div>
        <div class="spark" data-open="${esc(r.id)}">${sparklineSvg(r.values)}</div>
        <button class="reveal" data-reveal="${esc(r.id)}">${r.captionRevealed ? "hide caption" : "reveal caption"}</button>
        ${r.captionRevealed ? `<p class="caption">${esc(r.caption)}</p>` : ""}
      </div>`
    )
    .join("");

  const history = state.history
    .map((h) => `<button class="hist" data-query="${esc(h)}">${esc(h)}</button>`)
    .join("");

  const detail = state.detail
    ? `<div class="modal" data-close="1">
         <div class="modal-body">
           <h3>${esc(state.detail.id)}</h3>
           ${sparklineSvg(state.detail.values, 640, 160)}
           <p>${esc(state.detail.caption)}</p>
           <p class="labels">trend: ${esc(state.detail.labels.trend)} /
              periodic: ${esc(state.detail.labels.periodic)} /
              fluctuation: ${esc(state.detail.labels.fluctuation)}</p>
           <button data-close="1">close</button>
         </div>
       </div>`
    : "";

  root.innerHTML = `
    <h1>signal search</h1>
    <form id="search-form">
      <input id="query" type="text" placeholder="describe the signal..." value="${esc(state.query)}" />
      <input id="k" type="number" min="1" max="100" value="${state.k}" />
      <button id="go" type="submit" ${canSubmit(state) && !state.loading ? "" : "disabled"}>search</button>
    </form>
    ${state.error ? `<div class="banner error">${esc(state.error)}</div>` : ""}
    ${state.loading ? `<div class="banner">searching...</div>` : ""}
    <div class="history">${history}</div>
    <div class="cards">${cards}</div>
    ${detail}`;

  const form = document.getElementById("search-form") as HTMLFormElement;
  form.onsubmit = (e) => {
    e.preventDefault();
    void submit();
  };
  const queryInput = document.getElementById("query") as HTMLInputElement;
  queryInput.oninput = () => {
    state = setQuery(state, queryInput.value);
    (document.getElementById("go") as HTMLButtonElement).disabled =
      !canSubmit(state) || state.loading;
  };
  const kInput = document.getElementById("k") as HTMLInputElement;
  kInput.onchange = () => {
    state = setK(state, Number(kInput.value));
  };

  root.querySelectorAll<HTMLButtonElement>("[data-reveal]").forEach((btn) => {
    btn.onclick = () => update(toggleCaption(state, btn.dataset.reveal!));
  });
  root.querySelectorAll<HTMLElement>("[data-open]").forEach((el) => {
    el.onclick = () => void openDetail(el.dataset.open!);
  });
  root.querySelectorAll<HTMLElement>("[data-query]").forEach((el) => {
    el.onclick = () => {
      update(setQuery(state, el.dataset.query!));
      void submit();
    };
  });
  root.querySelectorAll<HTMLElement>("[data-close]").forEach((el) => {
    el.onclick = (e) => {
      if (e.target === el) update(detailClosed(state));
    };
  });
}

render();
