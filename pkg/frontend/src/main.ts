// DOM entry point: render into #app, wire clicks and arrow keys.

import { ReviewApi } from "./api.js";
import { GalleryController } from "./controller.js";
import { renderApp } from "./render.js";

export function mount(root: HTMLElement, api: ReviewApi = new ReviewApi()): GalleryController {
  const controller = new GalleryController(api, (state) => {
    root.innerHTML = renderApp(state);
  });

  root.addEventListener("click", (event) => {
    const target = event.target as HTMLElement;
    if (target.closest("#next")) void controller.next();
    else if (target.closest("#prev")) void controller.prev();
    else if (target.closest("#retry")) void controller.refreshCandidates();
    else {
      const card = target.closest(".card[data-type]") as HTMLElement | null;
      if (card && !card.classList.contains("disabled")) {
        void controller.select(card.dataset.type as string);
      }
    }
  });

  document.addEventListener("keydown", (event) => {
    if (event.key === "ArrowRight") void controller.next();
    if (event.key === "ArrowLeft") void controller.prev();
  });

  void controller.start();
  return controller;
}

const rootElement = typeof document !== "undefined" ? document.getElementById("app") : null;
if (rootElement) {
  mount(rootElement);
}
