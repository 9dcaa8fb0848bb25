import type { SnrValue, SweepPoint, SystemName } from "./types.js";

export interface ChartSeries {
    system: SystemName;
    xs: number[]; // SNR in dB ("inf" points are dropped from the chart)
    ys: number[]; // SSIM
}

const COLORS: Record<SystemName, string> = { dnn: "#4fc3f7", qam256: "#ffb74d" };

export function snrToNumber(v: SnrValue): number | null {
    return v === "inf" ? null : v;
}

/** Pure mapping from sweep points to plottable series (tested separately). */
export function chartSeries(points: SweepPoint[], systems: SystemName[]): ChartSeries[] {
    return systems.map((system) => {
        const xs: number[] = [];
        const ys: number[] = [];
        for (const p of points) {
            const x = snrToNumber(p.snr_db);
            const y = p.ssim[system];
            if (x !== null && y !== undefined) {
                xs.push(x);
                ys.push(y);
            }
        }
        return { system, xs, ys };
    });
}

/** Index of the series point nearest to a chart-space x coordinate. */
export function nearestIndex(xs: number[], x: number): number {
    let best = 0;
    for (let i = 1; i < xs.length; i++) {
        if (Math.abs(xs[i] - x) < Math.abs(xs[best] - x)) best = i;
    }
    return best;
}

export interface ChartLayout {
    x0: number;
    y0: number;
    w: number;
    h: number;
    xMin: number;
    xMax: number;
}

export function layout(canvas: { width: number; height: number }): ChartLayout {
    return { x0: 42, y0: 12, w: canvas.width - 58, h: canvas.height - 44, xMin: 0, xMax: 40 };
}

export function toPx(l: ChartLayout, x: number, y: number): [number, number] {
    const px = l.x0 + ((x - l.xMin) / (l.xMax - l.xMin)) * l.w;
    const py = l.y0 + (1 - y) * l.h;
    return [px, py];
}

export function fromPx(l: ChartLayout, px: number): number {
    return l.xMin + ((px - l.x0) / l.w) * (l.xMax - l.xMin);
}

export function drawChart(
    canvas: HTMLCanvasElement,
    series: ChartSeries[],
    currentSnr: SnrValue,
    hoverX: number | null,
): void {
    const ctx = canvas.getContext("2d");
    if (!ctx) return;
    const l = layout(canvas);
    ctx.clearRect(0, 0, canvas.width, canvas.height);

    ctx.strokeStyle = "#3a3f4a";
    ctx.fillStyle = "#9aa3b2";
    ctx.font = "11px system-ui, sans-serif";
    ctx.lineWidth = 1;
    for (let ss = 0; ss <= 1.0001; ss += 0.25) {
        const [, py] = toPx(l, 0, ss);
        ctx.beginPath();
        ctx.moveTo(l.x0, py);
        ctx.lineTo(l.x0 + l.w, py);
        ctx.stroke();
        ctx.fillText(ss.toFixed(2), 6, py + 4);
    }
    for (let snr = 0; snr <= 40; snr += 10) {
        const [px] = toPx(l, snr, 0);
        ctx.fillText(`${snr}`, px - 6, l.y0 + l.h + 16);
    }
    ctx.fillText("SNR (dB)", l.x0 + l.w / 2 - 24, canvas.height - 4);

    const cur = snrToNumber(currentSnr);
    if (cur !== null) {
        const [px] = toPx(l, cur, 0);
        ctx.strokeStyle = "#5e6673";
        ctx.setLineDash([4, 4]);
        ctx.beginPath();
        ctx.moveTo(px, l.y0);
        ctx.lineTo(px, l.y0 + l.h);
        ctx.stroke();
        ctx.setLineDash([]);
    }

    for (const s of series) {
        ctx.strokeStyle = COLORS[s.system];
        ctx.fillStyle = COLORS[s.system];
        ctx.lineWidth = 2;
        ctx.beginPath();
        s.xs.forEach((x, i) => {
            const [px, py] = toPx(l, x, s.ys[i]);
            if (i === 0) ctx.moveTo(px, py);
            else ctx.lineTo(px, py);
        });
        ctx.stroke();
        s.xs.forEach((x, i) => {
            const [px, py] = toPx(l, x, s.ys[i]);
            ctx.beginPath();
            ctx.arc(px, py, 3, 0, 2 * Math.PI);
            ctx.fill();
        });
    }

    if (hoverX !== null && series.length > 0 && series[0].xs.length > 0) {
        const x = fromPx(l, hoverX);
        const idx = nearestIndex(series[0].xs, x);
        const lines = series.map(
            (s) => `${s.system}: ${s.ys[idx] !== undefined ? s.ys[idx].toFixed(4) : "-"}`,
        );
        const snr = series[0].xs[idx];
        const [px] = toPx(l, snr, 0);
        ctx.fillStyle = "#d7dce3";
        ctx.fillText(`${snr} dB`, Math.min(px + 6, canvas.width - 120), l.y0 + 14);
        lines.forEach((t, i) => {
            ctx.fillText(t, Math.min(px + 6, canvas.width - 120), l.y0 + 28 + 13 * i);
        });
    }
}
