/** Thin JSON client for the pipeline service.
 *
 * Every method returns the service's response verbatim; nothing is
 * recomputed or rounded on this side. The fetch implementation is
 * injectable so tests can intercept or fake transport.
 */

import type { CameraParams, GcpPair, Seed } from "./format.js";
import type { RlePairs } from "./rle.js";

export interface SegmentResponse {
  width: number;
  height: number;
  segment_count: number;
  labels_rle: RlePairs;
}

export interface ClassifyResponse {
  width: number;
  height: number;
  mask_rle: RlePairs;
  conflicts: unknown[];
  single_class_warning: boolean;
}

export interface ResectResponse {
  intrinsics: { fx: number; fy: number; cx: number; cy: number };
  pose: {
    omega: number; phi: number; kappa: number;
    tx: number; ty: number; tz: number;
  };
  residuals: [number, number][];
  rmse: number;
  iterations: number;
  converged: boolean;
  behind_camera: number[];
}

export interface ElevationResponse {
  x: number;
  y: number;
  z: number;
}

export interface DomainError {
  code: string;
  message: string;
  [extra: string]: unknown;
}

/** A 422 response: domain-level guidance, not a transport failure. */
export class ServiceDomainError extends Error {
  readonly detail: DomainError;

  constructor(detail: DomainError) {
    super(detail.message);
    this.detail = detail;
  }
}

export type FetchLike = (url: string, init?: RequestInit) => Promise<Response>;

export class ServiceClient {
  private readonly base: string;
  private readonly fetchImpl: FetchLike;

  constructor(baseUrl: string, fetchImpl: FetchLike = fetch) {
    this.base = baseUrl.replace(/\/$/, "");
    this.fetchImpl = fetchImpl;
  }

  private async request<T>(path: string, init?: RequestInit): Promise<T> {
    const resp = await this.fetchImpl(this.base + path, init);
    if (resp.status === 422) {
      const body = (await resp.json()) as { detail: DomainError };
      throw new ServiceDomainError(body.detail);
    }
    if (!resp.ok) {
      throw new Error(`${path}: HTTP ${resp.status}`);
    }
    return (await resp.json()) as T;
  }

  private post<T>(path: string, body: unknown): Promise<T> {
    return this.request<T>(path, {
      method: "POST",
      headers: { "content-type": "application/json" },
      body: JSON.stringify(body),
    });
  }

  async frameUrl(frameId: string): Promise<string> {
    return `${this.base}/frame/${encodeURIComponent(frameId)}`;
  }

  segment(frameId: string): Promise<SegmentResponse> {
    return this.post("/segment", { frame_id: frameId });
  }

  classify(frameId: string, seeds: readonly Seed[]): Promise<ClassifyResponse> {
    return this.post("/classify", { frame_id: frameId, seeds });
  }

  resect(
    gcps: readonly GcpPair[],
    init: CameraParams,
    fixIntrinsics: boolean,
  ): Promise<ResectResponse> {
    return this.post("/resect", {
      gcps,
      init,
      fix_intrinsics: fixIntrinsics,
    });
  }

  elevation(x: number, y: number): Promise<ElevationResponse> {
    return this.request(`/elevation?x=${x}&y=${y}`);
  }
}
