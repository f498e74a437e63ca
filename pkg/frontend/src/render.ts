// HTML template strings for the gallery. No framework: the server is the
// source of truth and every interaction round-trips through state.ts.

import type { GalleryState } from "./state.js";
import { currentImage, effectiveSelection } from "./state.js";

function esc(s: string): string {
  return s.replace(/&/g, "&amp;").replace(/</g, "&lt;").replace(/>/g, "&gt;").replace(/"/g, "&quot;");
}

export function renderHeader(state: GalleryState): string {
  const image = currentImage(state);
  const position = state.images.length ? `${state.index + 1} / ${state.images.length}` : "–";
  const label = image?.label ? ` · ${esc(image.label)}` : "";
  return `
  <header class="bar">
    <button id="prev" title="previous (←)">&#8592;</button>
    <span class="which">${image ? esc(image.id) : "no images"}${label} <small>${position}</small></span>
    <button id="next" title="next (→)">&#8594;</button>
    <a id="report-link" href="#report">report</a>
  </header>`;
}

export function renderBanner(state: GalleryState): string {
  if (!state.error) return "";
  return `
  <div class="banner" role="alert">
    <span>${esc(state.error)}</span>
    <button id="retry">retry</button>
  </div>`;
}

export function renderCards(state: GalleryState): string {
  if (state.loading) return `<p class="status">loading…</p>`;
  const payload = state.candidates;
  if (!payload) return `<p class="status">no candidates</p>`;
  const selected = effectiveSelection(state);
  const cards = payload.cards
    .map((card) => {
      const classes = ["card"];
      if (!card.available) classes.push("disabled");
      if (card.type === selected) classes.push("selected");
      const badge =
        card.confidence !== null && card.confidence !== undefined
          ? `<span class="badge" title="confidence">${card.confidence.toFixed(4)}</span>`
          : "";
      const accuracy =
        card.accuracy !== undefined && card.accuracy !== null
          ? `<span class="accuracy" title="accuracy vs truth">${card.accuracy.toFixed(3)}</span>`
          : "";
      const body = card.available
        ? `<img loading="lazy" src="${esc(card.overlay)}" alt="${esc(card.type)} overlay">`
        : `<div class="empty">no candidate</div>`;
      return `
      <figure class="${classes.join(" ")}" data-type="${esc(card.type)}">
        ${body}
        <figcaption>${esc(card.type)} ${badge} ${accuracy}</figcaption>
      </figure>`;
    })
    .join("\n");
  return `
  <section class="gallery">
    <figure class="card original"><img src="${esc(payload.original)}" alt="original"><figcaption>original</figcaption></figure>
    ${cards}
  </section>`;
}

export function renderApp(state: GalleryState): string {
  return `${renderHeader(state)}\n${renderBanner(state)}\n${renderCards(state)}`;
}
