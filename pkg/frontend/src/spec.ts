import { z } from "zod";

/** Declarative description of one figure to render. */
export const figureSpecSchema = z.object({
  kind: z.enum(["histogram", "boxplot", "timeseries", "table"]),
  input: z.string(),
  schema: z.string(),
  manifest: z.string(),
  output: z.string(),
  title: z.string().default(""),
  xlabel: z.string().default(""),
  ylabel: z.string().default(""),
  // Only rows with status == "ok" carry meaningful error metrics.
  okOnly: z.boolean().default(true),
  // histogram / boxplot
  column: z.string().optional(),
  transform: z.enum(["none", "log10"]).default("none"),
  bins: z.number().int().positive().default(50),
  // boxplot
  groupBy: z.string().optional(),
  // timeseries
  x: z.string().optional(),
  y: z.array(z.string()).optional(),
  // table
  columns: z.array(z.string()).optional(),
}).strict();

export type FigureSpec = z.infer<typeof figureSpecSchema>;
