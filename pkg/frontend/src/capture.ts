const MAX_SIDE = 512;

/** Downscale target preserving aspect ratio, never upscaling. */
export function targetSize(w: number, h: number, maxSide = MAX_SIDE): [number, number] {
    const scale = Math.min(1, maxSide / Math.max(w, h));
    return [Math.max(1, Math.round(w * scale)), Math.max(1, Math.round(h * scale))];
}

export function stripDataUrl(dataUrl: string): string {
    const comma = dataUrl.indexOf(",");
    return comma >= 0 ? dataUrl.slice(comma + 1) : dataUrl;
}

export async function startCamera(video: HTMLVideoElement): Promise<MediaStream | null> {
    if (!navigator.mediaDevices?.getUserMedia) return null;
    try {
        const stream = await navigator.mediaDevices.getUserMedia({ video: true });
        video.srcObject = stream;
        await video.play();
        return stream;
    } catch (err) {
        console.error("camera unavailable:", err);
        return null;
    }
}

/** Draw the current video frame onto a canvas at <=512 px and return base64 PNG. */
export function grabFrame(video: HTMLVideoElement, canvas: HTMLCanvasElement): string | null {
    const w = video.videoWidth;
    const h = video.videoHeight;
    if (!w || !h) return null;
    const [tw, th] = targetSize(w, h);
    canvas.width = tw;
    canvas.height = th;
    const ctx = canvas.getContext("2d");
    if (!ctx) return null;
    ctx.drawImage(video, 0, 0, tw, th);
    return stripDataUrl(canvas.toDataURL("image/png"));
}

/** Load an uploaded PNG/JPEG, downscale client-side, return base64 PNG. */
export function fileToBase64Png(file: File, canvas: HTMLCanvasElement): Promise<string> {
    return new Promise((resolve, reject) => {
        const url = URL.createObjectURL(file);
        const img = new Image();
        img.onload = () => {
            URL.revokeObjectURL(url);
            const [tw, th] = targetSize(img.naturalWidth, img.naturalHeight);
            canvas.width = tw;
            canvas.height = th;
            const ctx = canvas.getContext("2d");
            if (!ctx) return reject(new Error("canvas 2d context unavailable"));
            ctx.drawImage(img, 0, 0, tw, th);
            resolve(stripDataUrl(canvas.toDataURL("image/png")));
        };
        img.onerror = () => {
            URL.revokeObjectURL(url);
            reject(new Error(`cannot decode ${file.name}`));
        };
        img.src = url;
    });
}
