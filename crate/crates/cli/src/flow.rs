//! Thermodynamic flow of a single NRG run as CSV.

use kondo_nrg::FlowTables;

use crate::error::Result;
use crate::fmt_num;

pub const FLOW_VERSION: &str = "# kondo-metro flow v1";

pub const FLOW_HEADER: [&str; 8] = [
    "shell",
    "T",
    "S_imp",
    "S_imp_smoothed",
    "C",
    "C_smoothed",
    "M",
    "chi",
];

pub fn write_flow<W: std::io::Write>(mut out: W, flow: &FlowTables) -> Result<()> {
    writeln!(out, "{FLOW_VERSION}").map_err(csv::Error::from)?;
    let mut w = csv::Writer::from_writer(out);
    w.write_record(FLOW_HEADER)?;
    let (s, c) = (flow.smoothed_entropies(), flow.smoothed_correlators());
    for (i, r) in flow.rows.iter().enumerate() {
        let mut rec = vec![r.shell.to_string()];
        rec.extend(
            [
                r.temperature,
                r.entropy_imp,
                s[i],
                r.correlator,
                c[i],
                r.magnetization,
                r.chi,
            ]
            .map(fmt_num),
        );
        w.write_record(rec)?;
    }
    w.flush().map_err(csv::Error::from)?;
    Ok(())
}
