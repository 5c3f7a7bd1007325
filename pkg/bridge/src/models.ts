import * as fs from "node:fs";

import { BatchFn } from "./serve";

/** Echo the first coordinate of every row. */
export function echoFirst(x: number[][]): number[] {
    return x.map((row) => row[0]);
}

/**
 * The first synthetic reference regression model, re-implemented here so a
 * cross-language parity test can compare it against the in-process version.
 * Inputs are canonical [0, 1] coordinates; four of them map onto [0.6, 1],
 * the rest are used as-is.
 */
export function f1(x: number[][]): number[] {
    return x.map((row) => {
        const b = row.slice();
        for (const k of [3, 4, 7, 9]) {
            b[k] = 0.6 + 0.4 * row[k];
        }
        return (
            Math.pow(Math.PI, b[0] * b[1]) * Math.sqrt(2 * b[2]) -
            Math.asin(b[3]) +
            Math.log(b[2] + b[4]) -
            (b[8] / b[9]) * Math.sqrt(b[6] / b[7]) -
            b[1] * b[6]
        );
    });
}

interface LinearModelFile {
    kind: "linear" | "logistic";
    coef: number[];
    intercept: number;
}

/**
 * Wrap a JSON model file as a batch callable.  Linear models return the
 * raw affine score; logistic models return the positive-class probability.
 */
export function loadModelFile(path: string): { fn: BatchFn; p: number } {
    const raw = fs.readFileSync(path, "utf-8");
    const model = JSON.parse(raw) as LinearModelFile;
    if (
        (model.kind !== "linear" && model.kind !== "logistic") ||
        !Array.isArray(model.coef) ||
        typeof model.intercept !== "number"
    ) {
        throw new Error(`not a usable model file: ${path}`);
    }
    const coef = model.coef;
    const fn: BatchFn = (x) =>
        x.map((row) => {
            let score = model.intercept;
            for (let k = 0; k < coef.length; k++) {
                score += coef[k] * row[k];
            }
            return model.kind === "logistic" ? 1 / (1 + Math.exp(-score)) : score;
        });
    return { fn, p: coef.length };
}
