import type {
    InfoResponse,
    SweepParams,
    SweepResponse,
    TransmitParams,
    TransmitResponse,
} from "./types.js";

export class ApiError extends Error {
    constructor(public status: number, message: string) {
        super(message);
    }
}

/** Thin JSON client for the demo service; every number shown in the UI
 *  comes from these responses, never from client-side computation. */
export class ApiClient {
    constructor(
        private baseUrl: string = "",
        private fetchImpl: typeof fetch = (...args) => fetch(...args),
    ) {}

    private async post<T>(path: string, body: unknown, signal?: AbortSignal): Promise<T> {
        const res = await this.fetchImpl(this.baseUrl + path, {
            method: "POST",
            headers: { "Content-Type": "application/json" },
            body: JSON.stringify(body),
            signal,
        });
        return this.decode<T>(res);
    }

    private async decode<T>(res: Response): Promise<T> {
        if (!res.ok) {
            let reason = `HTTP ${res.status}`;
            try {
                const data = (await res.json()) as { error?: string };
                if (data.error) reason = data.error;
            } catch {
                // non-JSON error body; keep the status text
            }
            throw new ApiError(res.status, reason);
        }
        return (await res.json()) as T;
    }

    async info(signal?: AbortSignal): Promise<InfoResponse> {
        const res = await this.fetchImpl(this.baseUrl + "/api/info", { signal });
        return this.decode<InfoResponse>(res);
    }

    async transmit(params: TransmitParams, signal?: AbortSignal): Promise<TransmitResponse> {
        return this.post<TransmitResponse>("/api/transmit", params, signal);
    }

    async sweep(params: SweepParams, signal?: AbortSignal): Promise<SweepResponse> {
        return this.post<SweepResponse>("/api/sweep", params, signal);
    }
}
