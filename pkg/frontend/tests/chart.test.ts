import { describe, expect, it } from "vitest";

import { chartSeries, fromPx, layout, nearestIndex, toPx } from "../src/chart.js";
import type { SweepPoint } from "../src/types.js";

const points: SweepPoint[] = [
    { snr_db: 0, ssim: { dnn: 0.4, qam256: 0.1 } },
    { snr_db: 20, ssim: { dnn: 0.8, qam256: 0.5 } },
    { snr_db: 40, ssim: { dnn: 0.9, qam256: 1.0 } },
    { snr_db: "inf", ssim: { dnn: 0.95, qam256: 1.0 } },
];

describe("chartSeries", () => {
    it("builds one line per system with nine-grid sweeps", () => {
        const grid = [0, 5, 10, 15, 20, 25, 30, 35, 40];
        const pts: SweepPoint[] = grid.map((snr, i) => ({
            snr_db: snr,
            ssim: { dnn: i / 10, qam256: i / 20 },
        }));
        const series = chartSeries(pts, ["dnn", "qam256"]);
        expect(series.length).toBe(2);
        expect(series[0].xs.length).toBe(9);
        expect(series[1].ys.length).toBe(9);
    });

    it("drops noiseless points and missing systems", () => {
        const series = chartSeries(points, ["dnn"]);
        expect(series[0].xs).toEqual([0, 20, 40]);
        expect(series[0].ys).toEqual([0.4, 0.8, 0.9]);
    });
});

describe("hover and projection", () => {
    it("nearestIndex finds the closest grid point", () => {
        expect(nearestIndex([0, 20, 40], 9)).toBe(0);
        expect(nearestIndex([0, 20, 40], 11)).toBe(1);
        expect(nearestIndex([0, 20, 40], 33)).toBe(2);
    });

    it("toPx and fromPx are inverse on the x axis", () => {
        const l = layout({ width: 640, height: 280 });
        for (const x of [0, 5, 17.5, 40]) {
            const [px] = toPx(l, x, 0.5);
            expect(fromPx(l, px)).toBeCloseTo(x, 9);
        }
    });
});
