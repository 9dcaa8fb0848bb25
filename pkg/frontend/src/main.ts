import { ApiClient } from "./api.js";
import { fileToBase64Png, grabFrame, startCamera } from "./capture.js";
import { chartSeries, drawChart } from "./chart.js";
import { DemoController, type UiState } from "./state.js";
import type { ChannelModel, SnrValue, SystemName, SystemResult } from "./types.js";

const $ = <T extends HTMLElement>(id: string): T => {
    const el = document.getElementById(id);
    if (!el) throw new Error(`missing element #${id}`);
    return el as T;
};

const api = new ApiClient("");
const video = $<HTMLVideoElement>("camera");
const scratch = document.createElement("canvas");
const chartCanvas = $<HTMLCanvasElement>("sweep-chart");
let chartHoverX: number | null = null;
let cameraStream: MediaStream | null = null;

const controller = new DemoController(api, render, 300);

function snrLabel(v: SnrValue): string {
    return v === "inf" ? "noiseless" : `${v} dB`;
}

function sliderToSnr(raw: string): SnrValue {
    const n = Number(raw);
    return n > 40 ? "inf" : n;
}

function fmt(v: number | null, digits = 2): string {
    return v === null ? "∞" : v.toFixed(digits);
}

function renderPanel(id: string, title: string, result: SystemResult | undefined): void {
    const panel = $(id);
    if (!result) {
        panel.classList.add("hidden");
        return;
    }
    panel.classList.remove("hidden");
    panel.querySelector(".panel-title")!.textContent = title;
    (panel.querySelector("img") as HTMLImageElement).src =
        `data:image/png;base64,${result.reconstruction}`;
    panel.querySelector(".badge-ssim")!.textContent = `SSIM ${result.ssim.toFixed(4)}`;
    panel.querySelector(".badge-psnr")!.textContent = `PSNR ${fmt(result.psnr_db)} dB`;
}

function render(s: UiState): void {
    $("snr-value").textContent = snrLabel(s.snrDb);
    const busy = s.busy || s.sweepBusy;
    for (const id of ["snr", "channel-awgn", "channel-rayleigh", "sys-dnn", "sys-qam256",
                      "seed-lock", "send", "run-sweep", "file-input", "snap"]) {
        ($(id) as HTMLInputElement | HTMLButtonElement).disabled = busy;
    }
    $("status").textContent = s.busy ? "transmitting…" : s.sweepBusy ? "sweeping…" : "";
    $("error").textContent = s.error ?? "";

    const res = s.lastResponse;
    if (res) {
        ($("original-img") as HTMLImageElement).src =
            `data:image/png;base64,${res.original_processed}`;
        $("original-meta").textContent =
            `${res.width}×${res.height} · ${snrLabel(res.snr_db)} ${res.channel} · seed ${res.seed} · ${res.timing_ms.toFixed(0)} ms`;
        renderPanel("panel-dnn", "learned codec", res.systems.dnn);
        renderPanel("panel-qam", "256-QAM", res.systems.qam256);
        $("results").classList.remove("hidden");
    } else if (!s.sourceImage) {
        $("results").classList.add("hidden");
    }

    $("seed-state").textContent =
        s.seedLock && s.lockedSeed !== null ? `locked: ${s.lockedSeed}` : "";

    if (s.lastSweep) {
        drawChart(
            chartCanvas,
            chartSeries(s.lastSweep.points, s.systems),
            s.snrDb,
            chartHoverX,
        );
        $("chart-wrap").classList.remove("hidden");
    }
}

async function init(): Promise<void> {
    try {
        const info = await api.info();
        $("model-info").textContent =
            `${info.checkpoint} · ${(info.param_count / 1e6).toFixed(2)}M params`;
    } catch (err) {
        $("error").textContent = `service unreachable: ${(err as Error).message}`;
    }

    cameraStream = await startCamera(video);
    if (!cameraStream) {
        $("camera-wrap").classList.add("hidden");
        $("camera-note").textContent = "camera unavailable - use file upload";
    }

    $("snap").addEventListener("click", () => {
        const b64 = grabFrame(video, scratch);
        if (b64) controller.setImage(b64);
    });

    $<HTMLInputElement>("file-input").addEventListener("change", async (ev) => {
        const file = (ev.target as HTMLInputElement).files?.[0];
        if (!file) return;
        try {
            controller.setImage(await fileToBase64Png(file, scratch));
        } catch (err) {
            $("error").textContent = (err as Error).message;
        }
    });

    $<HTMLInputElement>("snr").addEventListener("input", (ev) => {
        controller.setSnr(sliderToSnr((ev.target as HTMLInputElement).value));
    });
    $("send").addEventListener("click", () => controller.requestTransmit(true));

    for (const c of ["awgn", "rayleigh"] as ChannelModel[]) {
        $<HTMLInputElement>(`channel-${c}`).addEventListener("change", (ev) => {
            if ((ev.target as HTMLInputElement).checked) controller.setChannel(c);
        });
    }

    const systemBoxes: Array<[string, SystemName]> = [["sys-dnn", "dnn"], ["sys-qam256", "qam256"]];
    for (const [id] of systemBoxes) {
        $<HTMLInputElement>(id).addEventListener("change", () => {
            const systems = systemBoxes
                .filter(([boxId]) => $<HTMLInputElement>(boxId).checked)
                .map(([, name]) => name);
            controller.setSystems(systems);
        });
    }

    $<HTMLInputElement>("seed-lock").addEventListener("change", (ev) => {
        controller.setSeedLock((ev.target as HTMLInputElement).checked);
    });

    $("run-sweep").addEventListener("click", () => void controller.runSweep());

    chartCanvas.addEventListener("mousemove", (ev) => {
        const rect = chartCanvas.getBoundingClientRect();
        chartHoverX = ((ev.clientX - rect.left) / rect.width) * chartCanvas.width;
        render(controller.state);
    });
    chartCanvas.addEventListener("mouseleave", () => {
        chartHoverX = null;
        render(controller.state);
    });
}

void init();
