/**
 * Wire protocol shared by every bridge: one JSON object per line over
 * stdin/stdout.  The child speaks first with a handshake advertising its
 * input dimension; afterwards each request is answered by exactly one
 * response carrying the same id.  NaN/Infinity never cross the wire: a
 * non-finite output becomes an error response instead.
 */

export const PROTOCOL_NAME = "meta-anova-predictor";
export const PROTOCOL_VERSION = 1;

export interface Request {
    id: number;
    x: number[][];
}

export function handshakeLine(p: number): string {
    return JSON.stringify({ protocol: PROTOCOL_NAME, version: PROTOCOL_VERSION, p });
}

export function okLine(id: number, y: number[]): string {
    return JSON.stringify({ id, y });
}

export function errorLine(id: number, message: string): string {
    return JSON.stringify({ id, error: message });
}

/** Parse one request line; throws with a human-readable reason. */
export function parseRequest(line: string, p: number): Request {
    let obj: unknown;
    try {
        obj = JSON.parse(line);
    } catch {
        throw new Error("malformed JSON");
    }
    const req = obj as Partial<Request>;
    if (typeof req.id !== "number" || !Number.isInteger(req.id) || req.id < 0) {
        throw new Error("missing or invalid id");
    }
    if (!Array.isArray(req.x)) {
        throw new Error("missing input matrix x");
    }
    for (const row of req.x) {
        if (!Array.isArray(row) || row.length !== p) {
            throw new Error(`input row does not have ${p} coordinates`);
        }
        for (const v of row) {
            if (typeof v !== "number" || !Number.isFinite(v)) {
                throw new Error("non-finite input value");
            }
        }
    }
    return { id: req.id, x: req.x as number[][] };
}

/** Best-effort id recovery from a line that failed to parse. */
export function salvageId(line: string): number {
    const m = /"id"\s*:\s*(\d+)/.exec(line);
    return m ? Number(m[1]) : 0;
}
