import { runFigure } from "../cli.js";

process.exit(runFigure("latency-density", process.argv.slice(2)));
