import { ApiClient } from "./api.js";
import type {
    ChannelModel,
    SnrValue,
    SweepResponse,
    SystemName,
    TransmitResponse,
} from "./types.js";

export interface UiState {
    sourceImage: string | null;
    snrDb: SnrValue;
    channel: ChannelModel;
    systems: SystemName[];
    seedLock: boolean;
    lockedSeed: number | null;
    busy: boolean;
    sweepBusy: boolean;
    lastResponse: TransmitResponse | null;
    lastSweep: SweepResponse | null;
    error: string | null;
}

export const SNR_GRID: SnrValue[] = [0, 5, 10, 15, 20, 25, 30, 35, 40];

/** Orchestrates requests so the view stays consistent: one transmit in
 *  flight at a time, newer slider positions abort and supersede older
 *  pending ones, and image + badges always update together from a single
 *  response. */
export class DemoController {
    state: UiState = {
        sourceImage: null,
        snrDb: 20,
        channel: "rayleigh",
        systems: ["dnn", "qam256"],
        seedLock: false,
        lockedSeed: null,
        busy: false,
        sweepBusy: false,
        lastResponse: null,
        lastSweep: null,
        error: null,
    };

    private timer: ReturnType<typeof setTimeout> | null = null;
    private inflight: AbortController | null = null;
    private generation = 0;

    constructor(
        private api: ApiClient,
        private onChange: (s: UiState) => void,
        private debounceMs = 300,
    ) {
        if (debounceMs < 250) throw new Error("debounce below the 250 ms contract");
    }

    private emit(): void {
        this.onChange({ ...this.state });
    }

    setImage(b64: string): void {
        this.state.sourceImage = b64;
        this.state.lastResponse = null;
        this.state.lastSweep = null;
        this.state.error = null;
        this.emit();
        this.requestTransmit(true);
    }

    setChannel(c: ChannelModel): void {
        this.state.channel = c;
        this.state.lastSweep = null; // chart re-derives on the next sweep
        this.emit();
        this.requestTransmit(true);
    }

    setSystems(systems: SystemName[]): void {
        this.state.systems = systems;
        this.emit();
        if (systems.length > 0) this.requestTransmit(true);
    }

    setSeedLock(locked: boolean): void {
        this.state.seedLock = locked;
        if (locked && this.state.lockedSeed === null && this.state.lastResponse) {
            this.state.lockedSeed = this.state.lastResponse.seed;
        }
        if (!locked) this.state.lockedSeed = null;
        this.emit();
    }

    /** Slider moves debounce-retransmit; an explicit send skips the wait. */
    setSnr(v: SnrValue): void {
        this.state.snrDb = v;
        this.emit();
        this.requestTransmit(false);
    }

    requestTransmit(immediate: boolean): void {
        if (!this.state.sourceImage || this.state.systems.length === 0) return;
        if (this.timer !== null) clearTimeout(this.timer);
        if (immediate) {
            void this.fireTransmit();
        } else {
            this.timer = setTimeout(() => void this.fireTransmit(), this.debounceMs);
        }
    }

    private async fireTransmit(): Promise<void> {
        const image = this.state.sourceImage;
        if (!image) return;
        this.inflight?.abort();
        const ctl = new AbortController();
        this.inflight = ctl;
        const gen = ++this.generation;
        this.state.busy = true;
        this.state.error = null;
        this.emit();
        try {
            const res = await this.api.transmit(
                {
                    image,
                    snr_db: this.state.snrDb,
                    channel: this.state.channel,
                    systems: this.state.systems,
                    ...(this.state.seedLock && this.state.lockedSeed !== null
                        ? { seed: this.state.lockedSeed }
                        : {}),
                },
                ctl.signal,
            );
            if (gen !== this.generation) return; // superseded
            this.state.lastResponse = res;
            if (this.state.seedLock && this.state.lockedSeed === null) {
                this.state.lockedSeed = res.seed;
            }
        } catch (err) {
            if (gen !== this.generation || isAbort(err)) return;
            this.state.error = describe(err);
        } finally {
            if (gen === this.generation) {
                this.state.busy = false;
                this.inflight = null;
                this.emit();
            }
        }
    }

    async runSweep(): Promise<void> {
        const image = this.state.sourceImage;
        if (!image || this.state.sweepBusy) return;
        this.state.sweepBusy = true;
        this.state.error = null;
        this.emit();
        try {
            const res = await this.api.sweep({
                image,
                channel: this.state.channel,
                snr_grid: SNR_GRID,
                systems: this.state.systems,
                ...(this.state.seedLock && this.state.lockedSeed !== null
                    ? { seed: this.state.lockedSeed }
                    : {}),
            });
            this.state.lastSweep = res;
        } catch (err) {
            if (!isAbort(err)) this.state.error = describe(err);
        } finally {
            this.state.sweepBusy = false;
            this.emit();
        }
    }
}

function isAbort(err: unknown): boolean {
    return err instanceof DOMException && err.name === "AbortError";
}

function describe(err: unknown): string {
    return err instanceof Error ? err.message : String(err);
}
