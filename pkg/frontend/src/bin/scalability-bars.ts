import { runFigure } from "../cli.js";

process.exit(runFigure("scalability-bars", process.argv.slice(2)));
