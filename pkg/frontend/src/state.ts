// Gallery state: pure transition functions so the review flow is testable
// without a DOM. Selection is optimistic: the card highlights immediately,
// and rolls back to the server-confirmed value if the POST fails.

import type { CandidatesPayload, ImageInfo } from "./types.js";

export interface GalleryState {
  images: ImageInfo[];
  index: number;
  candidates: CandidatesPayload | null;
  loading: boolean;
  error: string | null; // non-null renders the retry banner
  pendingType: string | null; // optimistic selection awaiting the server
}

export function initialState(): GalleryState {
  return { images: [], index: 0, candidates: null, loading: true, error: null, pendingType: null };
}

export function withImages(state: GalleryState, images: ImageInfo[]): GalleryState {
  return { ...state, images, index: 0, loading: images.length > 0, error: null };
}

export function currentImage(state: GalleryState): ImageInfo | null {
  return state.images[state.index] ?? null;
}

export function step(state: GalleryState, delta: number): GalleryState {
  if (!state.images.length) return state;
  const index = (state.index + delta + state.images.length) % state.images.length;
  if (index === state.index) return state;
  return { ...state, index, candidates: null, loading: true, error: null, pendingType: null };
}

export function loadFailed(state: GalleryState, message: string): GalleryState {
  return { ...state, loading: false, error: message };
}

export function withCandidates(state: GalleryState, payload: CandidatesPayload): GalleryState {
  const image = currentImage(state);
  if (!image || payload.image !== image.id) return state; // stale response
  return { ...state, candidates: payload, loading: false, error: null };
}

/** The type currently shown as selected: optimistic first, else server state. */
export function effectiveSelection(state: GalleryState): string | null {
  return state.pendingType ?? state.candidates?.selected ?? null;
}

export function beginSelection(state: GalleryState, cardType: string): GalleryState {
  const card = state.candidates?.cards.find((c) => c.type === cardType);
  if (!card || !card.available) return state; // disabled cards are not selectable
  return { ...state, pendingType: cardType };
}

export function selectionConfirmed(state: GalleryState, cardType: string): GalleryState {
  const candidates = state.candidates
    ? { ...state.candidates, selected: cardType }
    : state.candidates;
  return { ...state, candidates, pendingType: null };
}

/** Roll the optimistic highlight back; the attempted type is returned so the
 * caller can offer a retry. */
export function selectionFailed(state: GalleryState, message: string): GalleryState {
  return { ...state, pendingType: null, error: message };
}

export function dismissError(state: GalleryState): GalleryState {
  return { ...state, error: null };
}
