// Payload shapes of the review server's JSON API.

export interface ImageInfo {
  id: string;
  has_truth: boolean;
  label: string | null;
}

export interface CandidateCard {
  type: string;
  available: boolean;
  confidence: number | null;
  mask: string;
  overlay: string;
  accuracy?: number | null;
}

export interface CandidatesPayload {
  image: string;
  original: string;
  cards: CandidateCard[];
  selected: string | null;
}

export interface SelectionAck {
  image: string;
  selection: { type: string; timestamp: string; user: string };
}

export interface ReportPayload {
  images: string[];
  per_type?: Record<string, number>;
  ensemble?: number;
  max_per_image?: number;
  human_selected?: number;
  dominating_counts?: Record<string, number>;
  selections?: Record<string, { type: string }>;
  note?: string;
}

export const CARD_TYPES = [
  "gray",
  "red",
  "green",
  "blue",
  "kmeans-ity",
  "kmeans-cra",
  "kmeans-hull",
  "ensemble",
] as const;
