/**
 * Parameter console model: the form the user fills before launching a run,
 * validated client-side against the selected dataset's grid header before
 * anything is sent to the server.
 */

export interface DatasetHeader {
  id: string;
  ncols: number;
  nrows: number;
  xllcorner: number;
  yllcorner: number;
  cellsize: number;
  nodata_value: number;
  crs_label: string;
}

export interface InletPick {
  row: number;
  col: number;
}

export interface RunForm {
  dt: number;
  duration: number;
  snapshotInterval: number;
  inlets: InletPick[];
  peakDischarge: number; // m^3/s at the hydrograph crest
  baseDischarge: number; // m^3/s at start and end
  crestTime: number; // s, position of the crest
  wetRule: boolean;
}

export interface FieldError {
  field: string;
  message: string;
}

export function defaultForm(): RunForm {
  return {
    dt: 1.0,
    duration: 600,
    snapshotInterval: 60,
    inlets: [],
    peakDischarge: 120,
    baseDischarge: 30,
    crestTime: 240,
    wetRule: true,
  };
}

export function inletInGrid(header: DatasetHeader, pick: InletPick): boolean {
  return (
    Number.isInteger(pick.row) &&
    Number.isInteger(pick.col) &&
    pick.row >= 0 &&
    pick.row < header.nrows &&
    pick.col >= 0 &&
    pick.col < header.ncols
  );
}

export function validateForm(form: RunForm, header: DatasetHeader): FieldError[] {
  const errors: FieldError[] = [];
  if (!(form.dt > 0)) errors.push({ field: "dt", message: "must be > 0" });
  if (!(form.duration > 0)) errors.push({ field: "duration", message: "must be > 0" });
  if (form.dt > 0) {
    const ratio = form.snapshotInterval / form.dt;
    if (!(form.snapshotInterval > 0) || Math.abs(ratio - Math.round(ratio)) > 1e-9) {
      errors.push({ field: "snapshotInterval", message: `must be a positive multiple of dt=${form.dt}` });
    }
  }
  if (form.inlets.length === 0) {
    errors.push({ field: "inlets", message: "click at least one inlet cell on the map" });
  }
  form.inlets.forEach((pick, i) => {
    if (!inletInGrid(header, pick)) {
      errors.push({
        field: `inlets[${i}]`,
        message: `(${pick.row}, ${pick.col}) is outside the ${header.nrows}x${header.ncols} grid`,
      });
    }
  });
  if (!(form.peakDischarge > 0)) {
    errors.push({ field: "peakDischarge", message: "discharge must be > 0" });
  }
  if (!(form.baseDischarge > 0)) {
    errors.push({ field: "baseDischarge", message: "discharge must be > 0" });
  }
  if (!(form.crestTime > 0) || form.crestTime >= form.duration) {
    errors.push({ field: "crestTime", message: "crest must fall inside (0, duration)" });
  }
  return errors;
}

/** Engine config document for POST /jobs. */
export function buildConfig(form: RunForm): Record<string, unknown> {
  return {
    dt: form.dt,
    duration: form.duration,
    snapshot_interval: form.snapshotInterval,
    inlet_cells: form.inlets.map((p) => [p.row, p.col, "hydrograph"]),
    hydrograph: [
      [0.0, form.baseDischarge],
      [form.crestTime, form.peakDischarge],
      [form.duration, form.baseDischarge],
    ],
    wet_rule_on: form.wetRule,
  };
}
