import { runFigure } from "../cli.js";

process.exit(runFigure("stall-decomposition", process.argv.slice(2)));
