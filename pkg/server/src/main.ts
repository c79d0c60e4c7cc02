/**
 * Reference model server for the latentprobe wire protocol.
 *
 * Serves the synthetic generator/embedder over stdio (default) or TCP.
 * To mount a real model, replace the synthetic calls in protocol.ts with
 * adapters that run your generator/embedder; the framing and error
 * conventions stay the same.
 *
 * Usage:
 *   node dist/main.js --synthetic D,m,k,seed [--tcp PORT]
 */

import net from "node:net";
import readline from "node:readline";

import { handleLine } from "./protocol.js";
import { SyntheticModel, buildModel } from "./synthetic.js";

interface Args {
  synthetic: string;
  tcp: number | null;
}

function parseArgs(argv: string[]): Args {
  const args: Args = { synthetic: "64,32,16,42", tcp: null };
  for (let i = 0; i < argv.length; i++) {
    switch (argv[i]) {
      case "--synthetic":
        args.synthetic = argv[++i] ?? args.synthetic;
        break;
      case "--tcp":
        args.tcp = Number(argv[++i]);
        break;
      default:
        process.stderr.write(`unknown argument: ${argv[i]}\n`);
        process.exit(2);
    }
  }
  return args;
}

function modelFromSpec(spec: string): SyntheticModel {
  const parts = spec.split(",").map((x) => parseInt(x, 10));
  if (parts.length !== 4 || parts.some((x) => !Number.isFinite(x))) {
    process.stderr.write(`--synthetic expects D,m,k,seed, got ${spec}\n`);
    process.exit(2);
  }
  const [d, m, k, seed] = parts;
  return buildModel(d, m, k, seed);
}

function serveStdio(model: SyntheticModel): void {
  const rl = readline.createInterface({ input: process.stdin, terminal: false });
  rl.on("line", (line) => {
    if (line.trim().length === 0) return;
    process.stdout.write(handleLine(model, line) + "\n");
  });
  rl.on("close", () => process.exit(0));
}

function serveTcp(model: SyntheticModel, port: number): void {
  // one connection at a time: later sockets wait until the current one closes
  const waiting: net.Socket[] = [];
  let busy = false;

  const attach = (socket: net.Socket): void => {
    busy = true;
    const rl = readline.createInterface({ input: socket, terminal: false });
    rl.on("line", (line) => {
      if (line.trim().length === 0) return;
      socket.write(handleLine(model, line) + "\n");
    });
    const release = (): void => {
      busy = false;
      const next = waiting.shift();
      if (next) attach(next);
    };
    socket.on("close", release);
    socket.on("error", () => socket.destroy());
  };

  const server = net.createServer((socket) => {
    if (busy) {
      waiting.push(socket);
    } else {
      attach(socket);
    }
  });
  server.listen(port, "127.0.0.1", () => {
    const address = server.address() as net.AddressInfo;
    process.stdout.write(`PORT ${address.port}\n`);
  });
}

const args = parseArgs(process.argv.slice(2));
const model = modelFromSpec(args.synthetic);
if (args.tcp !== null) {
  serveTcp(model, args.tcp);
} else {
  serveStdio(model);
}
