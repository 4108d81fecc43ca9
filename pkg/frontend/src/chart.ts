import type { SessionView } from "./model.js";

/**
 * Running proportions straight from the assignment history: after m
 * subjects, point k is N_{m,k}/m. No smoothing, no interpolation; the
 * series is a pure function of the API history.
 */
export type ChartSeries = {
  m: number[];
  proportions: number[][];
  rho: number[] | null;
  pending: number[];
};

export function buildSeries(view: SessionView): ChartSeries {
  const K = view.arms;
  const counts = new Array<number>(K).fill(0);
  const m: number[] = [];
  const proportions: number[][] = Array.from({ length: K }, () => []);
  view.history.forEach((entry, i) => {
    counts[entry.arm] = (counts[entry.arm] ?? 0) + 1;
    m.push(i + 1);
    for (let k = 0; k < K; k++) {
      proportions[k]!.push((counts[k] ?? 0) / (i + 1));
    }
  });
  return { m, proportions, rho: view.rho_hat, pending: view.pending.slice() };
}

const PALETTE = ["#2563eb", "#dc2626", "#059669", "#9333ea", "#d97706", "#0891b2"];

export function armColor(k: number): string {
  return PALETTE[k % PALETTE.length]!;
}

const MARGIN = { top: 12, right: 14, bottom: 24, left: 36 };

export function drawChart(canvas: HTMLCanvasElement, view: SessionView): void {
  const ctx = canvas.getContext("2d");
  if (!ctx) return;
  const width = canvas.width;
  const height = canvas.height;
  ctx.clearRect(0, 0, width, height);

  const series = buildSeries(view);
  const plotW = width - MARGIN.left - MARGIN.right;
  const plotH = height - MARGIN.top - MARGIN.bottom;
  const maxM = Math.max(series.m.length, 1);
  const x = (m: number) => MARGIN.left + (maxM === 1 ? plotW / 2 : ((m - 1) / (maxM - 1)) * plotW);
  const y = (p: number) => MARGIN.top + (1 - p) * plotH;

  // frame and quarter gridlines
  ctx.strokeStyle = "#d4d4d8";
  ctx.fillStyle = "#52525b";
  ctx.font = "10px sans-serif";
  ctx.lineWidth = 1;
  for (const p of [0, 0.25, 0.5, 0.75, 1]) {
    ctx.beginPath();
    ctx.moveTo(MARGIN.left, y(p));
    ctx.lineTo(width - MARGIN.right, y(p));
    ctx.stroke();
    ctx.fillText(p.toFixed(2), 4, y(p) + 3);
  }
  ctx.fillText("m = 1", MARGIN.left, height - 8);
  ctx.fillText(`m = ${maxM}`, width - MARGIN.right - 30, height - 8);

  // subjects still waiting on an outcome get a shaded band
  ctx.fillStyle = "rgba(161, 161, 170, 0.25)";
  const band = maxM > 1 ? plotW / (maxM - 1) : plotW;
  for (const subject of series.pending) {
    ctx.fillRect(x(subject + 1) - band / 2, MARGIN.top, band, plotH);
  }

  if (series.m.length === 0) return;

  for (let k = 0; k < view.arms; k++) {
    const points = series.proportions[k]!;
    ctx.strokeStyle = armColor(k);
    ctx.fillStyle = armColor(k);
    if (points.length === 1) {
      ctx.beginPath();
      ctx.arc(x(1), y(points[0]!), 3, 0, 2 * Math.PI);
      ctx.fill();
      continue;
    }
    ctx.lineWidth = 1.5;
    ctx.beginPath();
    points.forEach((p, i) => {
      if (i === 0) ctx.moveTo(x(i + 1), y(p));
      else ctx.lineTo(x(i + 1), y(p));
    });
    ctx.stroke();
  }

  // estimated target overlay, dashed
  if (series.rho) {
    ctx.setLineDash([5, 4]);
    series.rho.forEach((level, k) => {
      ctx.strokeStyle = armColor(k);
      ctx.beginPath();
      ctx.moveTo(MARGIN.left, y(level));
      ctx.lineTo(width - MARGIN.right, y(level));
      ctx.stroke();
    });
    ctx.setLineDash([]);
  }
}
