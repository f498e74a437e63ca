// Orchestrates API calls against the state machine. The DOM layer (main.ts)
// only forwards events here and repaints; the e2e test drives this class
// against a live backend exactly as the page does.

import { ReviewApi } from "./api.js";
import type { GalleryState } from "./state.js";
import {
  beginSelection,
  effectiveSelection,
  initialState,
  currentImage,
  loadFailed,
  selectionConfirmed,
  selectionFailed,
  step,
  withCandidates,
  withImages,
} from "./state.js";

export class GalleryController {
  state: GalleryState = initialState();

  constructor(
    readonly api: ReviewApi,
    private readonly onChange: (state: GalleryState) => void = () => {},
  ) {}

  private commit(state: GalleryState): void {
    this.state = state;
    this.onChange(state);
  }

  async start(): Promise<void> {
    try {
      const images = await this.api.listImages();
      this.commit(withImages(this.state, images));
    } catch (err) {
      this.commit(loadFailed(this.state, String(err)));
      return;
    }
    await this.refreshCandidates();
  }

  async refreshCandidates(): Promise<void> {
    const image = currentImage(this.state);
    if (!image) {
      this.commit(loadFailed(this.state, "dataset is empty"));
      return;
    }
    try {
      const payload = await this.api.candidates(image.id);
      this.commit(withCandidates(this.state, payload));
    } catch (err) {
      this.commit(loadFailed(this.state, String(err)));
    }
  }

  async next(): Promise<void> {
    this.commit(step(this.state, +1));
    await this.refreshCandidates();
  }

  async prev(): Promise<void> {
    this.commit(step(this.state, -1));
    await this.refreshCandidates();
  }

  /** Optimistic select: highlight now, roll back if the POST fails. */
  async select(cardType: string): Promise<boolean> {
    const image = currentImage(this.state);
    if (!image) return false;
    const optimistic = beginSelection(this.state, cardType);
    if (optimistic === this.state) return false; // unavailable card
    this.commit(optimistic);
    try {
      const ack = await this.api.select(image.id, cardType);
      this.commit(selectionConfirmed(this.state, ack.selection.type));
      return true;
    } catch (err) {
      this.commit(selectionFailed(this.state, `selection not saved: ${String(err)}`));
      return false;
    }
  }

  selectedType(): string | null {
    return effectiveSelection(this.state);
  }
}
