export { parseCsv, requireColumns, SchemaError, type Table } from "./csv.js";
export {
  FIGURE_KINDS,
  groupLabel,
  render,
  type FigureKind,
  type FigureSpec,
} from "./figures.js";
