import { echoFirst, f1, loadModelFile } from "./models";
import { serve } from "./serve";

function intFlag(args: string[], name: string, fallback: number): number {
    const idx = args.indexOf(name);
    if (idx >= 0 && idx + 1 < args.length) {
        const v = Number(args[idx + 1]);
        if (!Number.isInteger(v) || v <= 0) {
            throw new Error(`${name} needs a positive integer`);
        }
        return v;
    }
    return fallback;
}

function strFlag(args: string[], name: string): string | undefined {
    const idx = args.indexOf(name);
    return idx >= 0 && idx + 1 < args.length ? args[idx + 1] : undefined;
}

function usage(): never {
    process.stderr.write(
        "usage: main.js echo [--p N] | f1 | model --path model.json\n"
    );
    process.exit(2);
}

function main(): void {
    const args = process.argv.slice(2);
    const command = args[0];
    if (command === "echo") {
        serve(echoFirst, intFlag(args, "--p", 10));
    } else if (command === "f1") {
        serve(f1, 10);
    } else if (command === "model") {
        const path = strFlag(args, "--path");
        if (!path) {
            usage();
        }
        let loaded;
        try {
            loaded = loadModelFile(path);
        } catch (err) {
            // fatal: the error line takes the handshake's place
            const message = err instanceof Error ? err.message : String(err);
            process.stdout.write(JSON.stringify({ error: message }) + "\n");
            process.exit(3);
        }
        serve(loaded.fn, loaded.p);
    } else {
        usage();
    }
}

main();
