// Thin fetch client for the review server. Base URL is empty when the
// gallery is served by the backend itself.

import type { CandidatesPayload, ImageInfo, ReportPayload, SelectionAck } from "./types.js";

export class ApiError extends Error {
  constructor(
    message: string,
    readonly status: number | null = null,
  ) {
    super(message);
  }
}

async function getJson<T>(url: string, fetcher: typeof fetch): Promise<T> {
  let response: Response;
  try {
    response = await fetcher(url);
  } catch (err) {
    throw new ApiError(`backend unreachable: ${String(err)}`);
  }
  if (!response.ok) {
    throw new ApiError(`GET ${url} -> ${response.status}`, response.status);
  }
  return (await response.json()) as T;
}

export class ReviewApi {
  constructor(
    private readonly base: string = "",
    private readonly fetcher: typeof fetch = fetch,
  ) {}

  async listImages(): Promise<ImageInfo[]> {
    const payload = await getJson<{ images: ImageInfo[] }>(`${this.base}/api/images`, this.fetcher);
    return payload.images;
  }

  candidates(imageId: string): Promise<CandidatesPayload> {
    return getJson<CandidatesPayload>(
      `${this.base}/api/images/${encodeURIComponent(imageId)}/candidates`,
      this.fetcher,
    );
  }

  report(): Promise<ReportPayload> {
    return getJson<ReportPayload>(`${this.base}/api/report`, this.fetcher);
  }

  async select(imageId: string, cardType: string): Promise<SelectionAck> {
    let response: Response;
    try {
      response = await this.fetcher(
        `${this.base}/api/images/${encodeURIComponent(imageId)}/selection`,
        {
          method: "POST",
          headers: { "Content-Type": "application/json" },
          body: JSON.stringify({ type: cardType }),
        },
      );
    } catch (err) {
      throw new ApiError(`backend unreachable: ${String(err)}`);
    }
    if (!response.ok) {
      throw new ApiError(`selection rejected: ${response.status}`, response.status);
    }
    return (await response.json()) as SelectionAck;
  }

  imageUrl(path: string): string {
    return `${this.base}${path}`;
  }
}
