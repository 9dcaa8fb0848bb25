export type ChannelModel = "awgn" | "rayleigh";
export type SystemName = "dnn" | "qam256";
export type SnrValue = number | "inf";

export interface SystemResult {
    reconstruction: string; // base64 PNG
    ssim: number;
    psnr_db: number | null; // null encodes an infinite PSNR
}

export interface TransmitResponse {
    systems: Partial<Record<SystemName, SystemResult>>;
    original_processed: string;
    width: number;
    height: number;
    snr_db: SnrValue;
    channel: ChannelModel;
    seed: number;
    timing_ms: number;
}

export interface SweepPoint {
    snr_db: SnrValue;
    ssim: Partial<Record<SystemName, number>>;
}

export interface SweepResponse {
    points: SweepPoint[];
    channel: ChannelModel;
    seed: number;
    timing_ms: number;
}

export interface InfoResponse {
    config: Record<string, unknown>;
    param_count: number;
    checkpoint: string;
    channels: ChannelModel[];
    systems: SystemName[];
    snr_db: { min: number; max: number; noiseless: string };
    max_image_side: number;
}

export interface TransmitParams {
    image: string;
    snr_db: SnrValue;
    channel: ChannelModel;
    systems: SystemName[];
    seed?: number;
}

export interface SweepParams {
    image: string;
    channel: ChannelModel;
    snr_grid: SnrValue[];
    systems?: SystemName[];
    seed?: number;
}
