/** Single-user annotation session: seed placement and GCP refinement.
 *
 * The session owns only bookkeeping (lists, counters, pending clicks,
 * request sequencing). Every numerical value it exposes — elevations,
 * poses, residuals, rmse, masks — is stored verbatim from a service
 * response and surfaced unchanged.
 */

import {
  ServiceClient,
  ServiceDomainError,
  type ClassifyResponse,
  type ResectResponse,
} from "./api.js";
import { pixelToWorld, type WorldFileAffine } from "./affine.js";
import {
  cameraTxt,
  gcpsCsv,
  seedsCsv,
  type CameraParams,
  type GcpPair,
  type Seed,
  type SeedLabel,
} from "./format.js";

export interface Roi {
  x0: number;
  y0: number;
  w: number;
  h: number;
}

export type PlaceSeedResult =
  | { status: "placed" }
  | { status: "outside" }
  | { status: "duplicate"; index: number }
  | { status: "replaced"; index: number };

export interface SessionOptions {
  frameId: string;
  roi: Roi;
  init: CameraParams;
  mapAffine?: WorldFileAffine;
  fixIntrinsics?: boolean;
  /** Fewest GCPs before `/resect` runs automatically. */
  minGcps?: number;
}

export interface SessionExports {
  seedsCsv: string;
  gcpsCsv: string;
  /** Absent until a successful resection exists. */
  cameraTxt: string | null;
}

export class AnnotationSession {
  readonly frameId: string;
  readonly roi: Roi;
  readonly fixIntrinsics: boolean;
  readonly minGcps: number;

  private readonly client: ServiceClient;
  private init: CameraParams;
  private mapAffine: WorldFileAffine | null;

  private seedList: Seed[] = [];
  private activeSeedLabel: SeedLabel = "dry";

  private gcpList: GcpPair[] = [];
  private pendingImageClick: { u: number; v: number } | null = null;

  private resectSeq = 0;
  private lastResectResponse: ResectResponse | null = null;
  private guidanceMessage: string | null = null;
  private lastMaskResponse: ClassifyResponse | null = null;

  constructor(client: ServiceClient, opts: SessionOptions) {
    this.client = client;
    this.frameId = opts.frameId;
    this.roi = opts.roi;
    this.init = opts.init;
    this.mapAffine = opts.mapAffine ?? null;
    this.fixIntrinsics = opts.fixIntrinsics ?? false;
    this.minGcps = opts.minGcps ?? (this.fixIntrinsics ? 4 : 6);
  }

  // ---- seeds ------------------------------------------------------------

  get seeds(): readonly Seed[] {
    return this.seedList;
  }

  get activeLabel(): SeedLabel {
    return this.activeSeedLabel;
  }

  toggleLabel(): SeedLabel {
    this.activeSeedLabel = this.activeSeedLabel === "dry" ? "wet" : "dry";
    return this.activeSeedLabel;
  }

  seedCounts(): { dry: number; wet: number; total: number } {
    const dry = this.seedList.filter((s) => s.label === "dry").length;
    return { dry, wet: this.seedList.length - dry, total: this.seedList.length };
  }

  placeSeed(
    row: number,
    col: number,
    onDuplicate: "replace" | "reject" = "reject",
  ): PlaceSeedResult {
    if (row < 0 || row >= this.roi.h || col < 0 || col >= this.roi.w) {
      return { status: "outside" };
    }
    const index = this.seedList.findIndex((s) => s.row === row && s.col === col);
    if (index >= 0) {
      if (onDuplicate === "reject") return { status: "duplicate", index };
      this.seedList[index] = { row, col, label: this.activeSeedLabel };
      return { status: "replaced", index };
    }
    this.seedList.push({ row, col, label: this.activeSeedLabel });
    return { status: "placed" };
  }

  removeSeed(index: number): void {
    this.seedList.splice(index, 1);
  }

  /** Live wet/dry preview; the stored mask is the service response verbatim. */
  async previewMask(): Promise<ClassifyResponse> {
    const resp = await this.client.classify(this.frameId, this.seedList);
    this.lastMaskResponse = resp;
    return resp;
  }

  get lastMask(): ClassifyResponse | null {
    return this.lastMaskResponse;
  }

  // ---- GCPs -------------------------------------------------------------

  get gcps(): readonly GcpPair[] {
    return this.gcpList;
  }

  setMapAffine(affine: WorldFileAffine): void {
    this.mapAffine = affine;
  }

  setInit(init: CameraParams): void {
    this.init = init;
  }

  get initCamera(): CameraParams {
    return this.init;
  }

  /** First half of a pair: remember the image click. */
  beginGcp(u: number, v: number): void {
    this.pendingImageClick = { u, v };
  }

  get pendingGcp(): { u: number; v: number } | null {
    return this.pendingImageClick;
  }

  /** Second half: map click -> world XY via the affine, Z via the service,
   * then re-resect when enough pairs exist. */
  async completeGcp(mapCol: number, mapRow: number): Promise<void> {
    if (!this.pendingImageClick) {
      throw new Error("no pending image click; click the frame first");
    }
    if (!this.mapAffine) {
      throw new Error("map transform not configured");
    }
    const { u, v } = this.pendingImageClick;
    const { x, y } = pixelToWorld(this.mapAffine, mapCol, mapRow);
    const elev = await this.client.elevation(x, y);
    this.gcpList.push({ u, v, x, y, z: elev.z });
    this.pendingImageClick = null;
    await this.maybeResect();
  }

  async removeGcp(index: number): Promise<void> {
    this.gcpList.splice(index, 1);
    await this.maybeResect();
  }

  async moveGcpImage(index: number, u: number, v: number): Promise<void> {
    const g = this.gcpList[index];
    this.gcpList[index] = { ...g, u, v };
    await this.maybeResect();
  }

  private async maybeResect(): Promise<void> {
    if (this.gcpList.length < this.minGcps) {
      this.guidanceMessage =
        `need ${this.minGcps - this.gcpList.length} more GCP(s) ` +
        `(${this.gcpList.length}/${this.minGcps})`;
      return;
    }
    const seq = ++this.resectSeq;
    const gcpsAtCall = this.gcpList.map((g) => ({ ...g }));
    try {
      const resp = await this.client.resect(
        gcpsAtCall, this.init, this.fixIntrinsics,
      );
      if (seq !== this.resectSeq) return; // superseded by a newer edit
      this.lastResectResponse = resp;
      this.guidanceMessage = null;
    } catch (err) {
      if (seq !== this.resectSeq) return;
      if (err instanceof ServiceDomainError) {
        this.guidanceMessage = `${err.detail.code}: ${err.detail.message}`;
        return;
      }
      throw err;
    }
  }

  // ---- resection results (service responses, verbatim) ------------------

  get lastResect(): ResectResponse | null {
    return this.lastResectResponse;
  }

  get guidance(): string | null {
    return this.guidanceMessage;
  }

  /** The rmse badge value: the last `/resect` response field, untouched. */
  get rmse(): number | null {
    return this.lastResectResponse ? this.lastResectResponse.rmse : null;
  }

  get residuals(): readonly [number, number][] {
    return this.lastResectResponse ? this.lastResectResponse.residuals : [];
  }

  /** Index of the GCP to highlight (largest residual vector). Selection
   * only; the residual values themselves are shown verbatim. */
  worstGcpIndex(): number | null {
    const res = this.residuals;
    if (res.length === 0) return null;
    let worst = 0;
    let worstSq = -1;
    res.forEach(([du, dv], i) => {
      const sq = du * du + dv * dv;
      if (sq > worstSq) {
        worstSq = sq;
        worst = i;
      }
    });
    return worst;
  }

  displayedCamera(): CameraParams | null {
    const r = this.lastResectResponse;
    if (!r) return null;
    return { ...r.intrinsics, ...r.pose };
  }

  // ---- export -----------------------------------------------------------

  exportSession(): SessionExports {
    const camera = this.displayedCamera();
    return {
      seedsCsv: seedsCsv(this.seedList),
      gcpsCsv: gcpsCsv(this.gcpList),
      cameraTxt: camera ? cameraTxt(camera) : null,
    };
  }

  importSeeds(seeds: readonly Seed[]): void {
    this.seedList = seeds.map((s) => ({ ...s }));
  }

  importGcps(gcps: readonly GcpPair[]): Promise<void> {
    this.gcpList = gcps.map((g) => ({ ...g }));
    return this.maybeResect();
  }
}
