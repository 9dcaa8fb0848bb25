/**
 * Live-service round trip (acceptance S1). Runs only when
 * SEMLINK_SERVICE_URL points at a serving checkpoint, e.g.
 *   semlink serve --ckpt artifacts/desk.ckpt --port 8080 &
 *   SEMLINK_SERVICE_URL=http://127.0.0.1:8080 npm test
 */
import { readFileSync } from "node:fs";
import { dirname, join } from "node:path";
import { fileURLToPath } from "node:url";
import { describe, expect, it } from "vitest";

import { ApiClient } from "../src/api.js";

const url = process.env.SEMLINK_SERVICE_URL;
const fixture = join(dirname(fileURLToPath(import.meta.url)), "fixtures", "photo256.b64");

describe.skipIf(!url)("live service round trip (S1)", () => {
    const api = new ApiClient(url ?? "");
    const image = readFileSync(fixture, "utf-8").trim();

    it("transmits a 256x256 photo through both systems within a second", async () => {
        const t0 = performance.now();
        const res = await api.transmit({
            image,
            snr_db: 15,
            channel: "rayleigh",
            systems: ["dnn", "qam256"],
            seed: 7,
        });
        const elapsed = performance.now() - t0;
        expect(res.width).toBe(256);
        expect(res.height).toBe(256);
        expect(res.systems.dnn?.reconstruction.length).toBeGreaterThan(0);
        expect(res.systems.qam256?.reconstruction.length).toBeGreaterThan(0);
        expect(res.systems.dnn?.ssim).toBeGreaterThan(0);
        console.log(`transmit round trip: ${elapsed.toFixed(0)} ms (server ${res.timing_ms.toFixed(0)} ms)`);
        expect(elapsed).toBeLessThanOrEqual(1000);
    }, 30_000);

    it("reproduces pixel-identical reconstructions under a locked seed", async () => {
        const params = {
            image,
            snr_db: 10 as const,
            channel: "rayleigh" as const,
            systems: ["dnn", "qam256"] as ("dnn" | "qam256")[],
            seed: 424242,
        };
        const a = await api.transmit(params);
        const b = await api.transmit(params);
        expect(a.systems.dnn?.reconstruction).toBe(b.systems.dnn?.reconstruction);
        expect(a.systems.qam256?.reconstruction).toBe(b.systems.qam256?.reconstruction);
        expect(a.systems.dnn?.ssim).toBe(b.systems.dnn?.ssim);
    }, 30_000);

    it("shows QAM SSIM increasing from 0 to 40 dB in the sweep", async () => {
        const res = await api.sweep({
            image,
            channel: "awgn",
            snr_grid: [0, 5, 10, 15, 20, 25, 30, 35, 40],
            systems: ["qam256"],
            seed: 11,
        });
        const ys = res.points.map((p) => p.ssim.qam256 ?? 0);
        expect(ys[ys.length - 1]).toBeGreaterThan(ys[0]);
        let rises = 0;
        for (let i = 1; i < ys.length; i++) if (ys[i] >= ys[i - 1]) rises += 1;
        expect(rises).toBeGreaterThanOrEqual(6); // monotone trend, single-shot noise allowed
        expect(ys[ys.length - 1]).toBeGreaterThan(0.99);
    }, 60_000);
});
