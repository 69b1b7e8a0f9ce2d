import { runFigure } from "../cli.js";

process.exit(runFigure("perf-area", process.argv.slice(2)));
