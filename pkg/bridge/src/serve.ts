import * as readline from "node:readline";

import {
    errorLine,
    handshakeLine,
    okLine,
    parseRequest,
    salvageId,
} from "./protocol";

export type BatchFn = (x: number[][]) => number[];

/**
 * Run the protocol loop on stdio until EOF, answering every request with
 * either a value vector or an error response.  A throwing callable or a
 * non-finite output only fails the offending request; the loop continues.
 * Closing stdin ends the process with exit code 0.
 */
export function serve(fn: BatchFn, p: number): void {
    process.stdout.write(handshakeLine(p) + "\n");
    const rl = readline.createInterface({ input: process.stdin, terminal: false });
    rl.on("line", (line: string) => {
        if (line.trim() === "") {
            return;
        }
        let id = 0;
        try {
            const req = parseRequest(line, p);
            id = req.id;
            const y = fn(req.x);
            if (y.length !== req.x.length) {
                throw new Error(`callable returned ${y.length} values for ${req.x.length} rows`);
            }
            for (const v of y) {
                if (typeof v !== "number" || !Number.isFinite(v)) {
                    throw new Error("non-finite output");
                }
            }
            process.stdout.write(okLine(id, y) + "\n");
        } catch (err) {
            if (id === 0) {
                id = salvageId(line);
            }
            const message = err instanceof Error ? err.message : String(err);
            process.stdout.write(errorLine(id, message) + "\n");
        }
    });
    rl.on("close", () => {
        process.exit(0);
    });
}
