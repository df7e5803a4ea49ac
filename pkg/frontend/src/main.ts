/** Browser entry point: wires the annotation session to a minimal DOM.
 *
 * Layout: a frame image with an SVG overlay (seeds, GCPs, residual
 * arrows), a map image for the world side of GCP pairs, counters, the
 * rmse badge, and export buttons. All numbers on screen come straight
 * from service responses via the session.
 */

import { ServiceClient } from "./api.js";
import { g17, parseCameraTxt } from "./format.js";
import { AnnotationSession, type Roi } from "./session.js";
import type { WorldFileAffine } from "./affine.js";

const RESIDUAL_SCALE = 10; // arrows are drawn at 10x; the legend says so

type Mode = "seed" | "gcp";

function el<T extends HTMLElement>(id: string): T {
  const node = document.getElementById(id);
  if (!node) throw new Error(`missing element #${id}`);
  return node as T;
}

function svgEl<K extends keyof SVGElementTagNameMap>(
  tag: K,
  attrs: Record<string, string>,
): SVGElementTagNameMap[K] {
  const node = document.createElementNS("http://www.w3.org/2000/svg", tag);
  for (const [k, v] of Object.entries(attrs)) node.setAttribute(k, v);
  return node;
}

function download(filename: string, text: string): void {
  const blob = new Blob([text], { type: "text/plain" });
  const url = URL.createObjectURL(blob);
  const a = document.createElement("a");
  a.href = url;
  a.download = filename;
  a.click();
  URL.revokeObjectURL(url);
}

export async function boot(): Promise<void> {
  const params = new URLSearchParams(window.location.search);
  const base = params.get("service") ?? "http://localhost:8000";
  const frameId = params.get("frame") ?? "0";

  const client = new ServiceClient(base);
  const frameImg = el<HTMLImageElement>("frame");
  frameImg.src = await client.frameUrl(frameId);
  await frameImg.decode();

  const roi: Roi = { x0: 0, y0: 0, w: frameImg.naturalWidth, h: frameImg.naturalHeight };
  const initText = el<HTMLTextAreaElement>("camera-init").value;
  const mapAffine: WorldFileAffine = JSON.parse(
    el<HTMLTextAreaElement>("map-affine").value,
  );
  const session = new AnnotationSession(client, {
    frameId,
    roi,
    init: parseCameraTxt(initText),
    mapAffine,
    fixIntrinsics: params.get("fix_intrinsics") === "1",
  });

  const overlay = el<HTMLElement>("overlay") as unknown as SVGSVGElement;
  overlay.setAttribute("viewBox", `0 0 ${roi.w} ${roi.h}`);
  const modeButton = el<HTMLButtonElement>("mode");
  const labelButton = el<HTMLButtonElement>("label");
  const status = el<HTMLElement>("status");
  let mode: Mode = "seed";

  function redraw(): void {
    overlay.replaceChildren();
    for (const s of session.seeds) {
      overlay.appendChild(svgEl("circle", {
        cx: String(s.col), cy: String(s.row), r: "2",
        fill: s.label === "wet" ? "#36c" : "#c63",
      }));
    }
    const worst = session.worstGcpIndex();
    session.gcps.forEach((gcp, i) => {
      overlay.appendChild(svgEl("rect", {
        x: String(gcp.u - 2), y: String(gcp.v - 2), width: "4", height: "4",
        fill: "none", stroke: i === worst ? "#e22" : "#2a2",
      }));
      const res = session.residuals[i];
      if (res) {
        overlay.appendChild(svgEl("line", {
          x1: String(gcp.u), y1: String(gcp.v),
          x2: String(gcp.u + res[0] * RESIDUAL_SCALE),
          y2: String(gcp.v + res[1] * RESIDUAL_SCALE),
          stroke: "#e22", "stroke-width": "0.5",
        }));
      }
    });

    const counts = session.seedCounts();
    el("seed-counts").textContent =
      `${counts.dry} dry / ${counts.wet} wet seeds, ${session.gcps.length} GCPs`;
    const rmse = session.rmse;
    el("rmse").textContent = rmse === null ? "rmse: -" : `rmse: ${g17(rmse)} px`;
    el("scale-note").textContent = `residual arrows x${RESIDUAL_SCALE}`;
    status.textContent = session.guidance ?? "";
    labelButton.textContent = `label: ${session.activeLabel}`;
    modeButton.textContent = `mode: ${mode}`;
  }

  frameImg.addEventListener("click", (ev) => {
    const rect = frameImg.getBoundingClientRect();
    const col = Math.round((ev.clientX - rect.left) * (roi.w / rect.width));
    const row = Math.round((ev.clientY - rect.top) * (roi.h / rect.height));
    if (mode === "seed") {
      const placed = session.placeSeed(row, col, "replace");
      if (placed.status === "outside") status.textContent = "click inside the frame";
      redraw();
    } else {
      session.beginGcp(col, row);
      status.textContent = "now click the matching map point";
    }
  });

  el<HTMLImageElement>("map").addEventListener("click", (ev) => {
    if (mode !== "gcp" || !session.pendingGcp) return;
    const img = ev.currentTarget as HTMLImageElement;
    const rect = img.getBoundingClientRect();
    const col = (ev.clientX - rect.left) * (img.naturalWidth / rect.width);
    const row = (ev.clientY - rect.top) * (img.naturalHeight / rect.height);
    session.completeGcp(col, row).then(redraw, (err: Error) => {
      status.textContent = err.message;
    });
  });

  modeButton.addEventListener("click", () => {
    mode = mode === "seed" ? "gcp" : "seed";
    redraw();
  });
  labelButton.addEventListener("click", () => {
    session.toggleLabel();
    redraw();
  });
  el<HTMLButtonElement>("preview").addEventListener("click", () => {
    session.previewMask().then(redraw, (err: Error) => {
      status.textContent = err.message;
    });
  });
  el<HTMLButtonElement>("export").addEventListener("click", () => {
    const files = session.exportSession();
    download("seeds.csv", files.seedsCsv);
    download("gcps.csv", files.gcpsCsv);
    if (files.cameraTxt !== null) download("camera.txt", files.cameraTxt);
  });

  redraw();
}

if (typeof document !== "undefined" && document.getElementById("frame")) {
  boot().catch((err: Error) => {
    const status = document.getElementById("status");
    if (status) status.textContent = err.message;
  });
}
