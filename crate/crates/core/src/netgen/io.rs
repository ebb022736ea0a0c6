//! Replayable scenario bundle: a directory holding
//!
//! * `scenario.txt` - `key = value` configuration echo
//! * `bs.csv` - `bs,x,y`
//! * `users.csv` - `cell,user,x,y,velocity`
//! * `links.csv` - `bs,cell,user,beta,rho,angle`
//!
//! Floats are written in shortest round-trip form, so reading a bundle back
//! reproduces the scenario bit for bit.

use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};
use crate::kv::{self, Entry};

use super::{db_to_linear, LinkTensor, Point, Scenario, ScenarioConfig};

/// Renders the configuration as `key = value` lines.
pub fn config_to_kv(config: &ScenarioConfig) -> String {
    let mut s = String::new();
    let c = config;
    let _ = writeln!(s, "num_cells = {}", c.num_cells);
    let _ = writeln!(s, "users_per_cell = {}", c.users_per_cell);
    let _ = writeln!(s, "cell_radius = {}  # m", c.cell_radius);
    let _ = writeln!(s, "min_distance = {}  # m", c.min_distance);
    let _ = writeln!(s, "pathloss_exponent = {}", c.pathloss_exponent);
    let _ = writeln!(s, "carrier_freq = {}  # Hz", c.carrier_freq);
    let _ = writeln!(s, "slot_duration = {}  # s", c.slot_duration);
    let _ = writeln!(s, "slot_symbols = {}", c.slot_symbols);
    let _ = writeln!(s, "speed_min = {}  # m/s", c.speed_min);
    let _ = writeln!(s, "speed_max = {}  # m/s", c.speed_max);
    let _ = writeln!(s, "pilot_power = {}  # linear, noise-normalized", c.pilot_power);
    let _ = writeln!(s, "uplink_power = {}  # linear, noise-normalized", c.uplink_power);
    let _ = writeln!(s, "shadowing_db = {}", c.shadowing_db);
    let _ = writeln!(s, "seed = {}", c.rng_seed);
    s
}

/// Applies one entry to `config`. Returns `Ok(false)` for keys that are not
/// scenario keys so callers can handle their own.
pub fn apply_entry(config: &mut ScenarioConfig, entry: &Entry, origin: &Path) -> Result<bool> {
    let c = config;
    match entry.key.as_str() {
        "num_cells" => c.num_cells = kv::value(entry, origin)?,
        "users_per_cell" => c.users_per_cell = kv::value(entry, origin)?,
        "cell_radius" => c.cell_radius = kv::value(entry, origin)?,
        "min_distance" => c.min_distance = kv::value(entry, origin)?,
        "pathloss_exponent" => c.pathloss_exponent = kv::value(entry, origin)?,
        "carrier_freq" => c.carrier_freq = kv::value(entry, origin)?,
        "slot_duration" => c.slot_duration = kv::value(entry, origin)?,
        "slot_symbols" => c.slot_symbols = kv::value(entry, origin)?,
        "speed_min" => c.speed_min = kv::value(entry, origin)?,
        "speed_max" => c.speed_max = kv::value(entry, origin)?,
        "speed_min_kmh" => c.speed_min = kv::value::<f64>(entry, origin)? / 3.6,
        "speed_max_kmh" => c.speed_max = kv::value::<f64>(entry, origin)? / 3.6,
        "pilot_power" => c.pilot_power = kv::value(entry, origin)?,
        "uplink_power" => c.uplink_power = kv::value(entry, origin)?,
        "pilot_power_db" => c.pilot_power = db_to_linear(kv::value(entry, origin)?),
        "uplink_power_db" => c.uplink_power = db_to_linear(kv::value(entry, origin)?),
        "shadowing_db" => c.shadowing_db = kv::value(entry, origin)?,
        "seed" => c.rng_seed = kv::value(entry, origin)?,
        _ => return Ok(false),
    }
    Ok(true)
}

fn csv_writer(path: &Path) -> Result<csv::Writer<std::fs::File>> {
    csv::Writer::from_path(path).map_err(|e| csv_err(path, e))
}

fn csv_err(path: &Path, e: csv::Error) -> Error {
    if e.is_io_error() {
        match e.into_kind() {
            csv::ErrorKind::Io(io) => Error::io(path, io),
            _ => unreachable!(),
        }
    } else {
        Error::parse(path, e.to_string())
    }
}

pub(crate) fn write_rows<I, R>(path: &Path, header: &[&str], rows: I) -> Result<()>
where
    I: IntoIterator<Item = R>,
    R: IntoIterator<Item = String>,
{
    let mut w = csv_writer(path)?;
    w.write_record(header).map_err(|e| csv_err(path, e))?;
    for row in rows {
        let row: Vec<String> = row.into_iter().collect();
        w.write_record(&row).map_err(|e| csv_err(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

pub(crate) fn read_rows(path: &Path) -> Result<Vec<Vec<String>>> {
    let mut r = csv::Reader::from_path(path).map_err(|e| csv_err(path, e))?;
    let mut out = Vec::new();
    for rec in r.records() {
        let rec = rec.map_err(|e| csv_err(path, e))?;
        out.push(rec.iter().map(str::to_string).collect());
    }
    Ok(out)
}

pub(crate) fn field<T: std::str::FromStr>(row: &[String], i: usize, path: &Path) -> Result<T> {
    row.get(i)
        .and_then(|s| s.parse().ok())
        .ok_or_else(|| Error::parse(path, format!("bad or missing column {i} in row {row:?}")))
}

pub fn write_bundle(scenario: &Scenario, dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let cfg_path = dir.join("scenario.txt");
    std::fs::write(&cfg_path, config_to_kv(&scenario.config)).map_err(|e| Error::io(&cfg_path, e))?;

    write_rows(
        &dir.join("bs.csv"),
        &["bs", "x", "y"],
        scenario
            .bs_positions
            .iter()
            .enumerate()
            .map(|(j, p)| vec![j.to_string(), p.x.to_string(), p.y.to_string()]),
    )?;

    let cells = scenario.num_cells();
    let users = scenario.users_per_cell();
    let mut user_rows = Vec::new();
    for cell in 0..cells {
        for user in 0..users {
            let p = scenario.user_positions[cell][user];
            user_rows.push(vec![
                cell.to_string(),
                user.to_string(),
                p.x.to_string(),
                p.y.to_string(),
                scenario.velocity[cell][user].to_string(),
            ]);
        }
    }
    write_rows(&dir.join("users.csv"), &["cell", "user", "x", "y", "velocity"], user_rows)?;

    let mut link_rows = Vec::new();
    for bs in 0..cells {
        for cell in 0..cells {
            for user in 0..users {
                link_rows.push(vec![
                    bs.to_string(),
                    cell.to_string(),
                    user.to_string(),
                    scenario.beta.get(bs, cell, user).to_string(),
                    scenario.rho.get(bs, cell, user).to_string(),
                    scenario.angle.get(bs, cell, user).to_string(),
                ]);
            }
        }
    }
    write_rows(
        &dir.join("links.csv"),
        &["bs", "cell", "user", "beta", "rho", "angle"],
        link_rows,
    )
}

pub fn read_bundle(dir: &Path) -> Result<Scenario> {
    let cfg_path = dir.join("scenario.txt");
    let mut config = ScenarioConfig::default();
    for entry in kv::read(&cfg_path)? {
        if !apply_entry(&mut config, &entry, &cfg_path)? {
            return Err(Error::parse(&cfg_path, format!("unknown key `{}`", entry.key)));
        }
    }
    let cells = config.num_cells;
    let users = config.users_per_cell;

    let bs_path = dir.join("bs.csv");
    let mut bs_positions = vec![Point::ORIGIN; cells];
    for row in read_rows(&bs_path)? {
        let j: usize = field(&row, 0, &bs_path)?;
        if j >= cells {
            return Err(Error::parse(&bs_path, format!("bs index {j} out of range")));
        }
        bs_positions[j] = Point {
            x: field(&row, 1, &bs_path)?,
            y: field(&row, 2, &bs_path)?,
        };
    }

    let users_path = dir.join("users.csv");
    let mut user_positions = vec![vec![Point::ORIGIN; users]; cells];
    let mut velocity = vec![vec![0.0; users]; cells];
    for row in read_rows(&users_path)? {
        let cell: usize = field(&row, 0, &users_path)?;
        let user: usize = field(&row, 1, &users_path)?;
        if cell >= cells || user >= users {
            return Err(Error::parse(&users_path, format!("user ({cell},{user}) out of range")));
        }
        user_positions[cell][user] = Point {
            x: field(&row, 2, &users_path)?,
            y: field(&row, 3, &users_path)?,
        };
        velocity[cell][user] = field(&row, 4, &users_path)?;
    }

    let links_path = dir.join("links.csv");
    let mut beta = LinkTensor::zeros(cells, users);
    let mut rho = LinkTensor::zeros(cells, users);
    let mut angle = LinkTensor::zeros(cells, users);
    for row in read_rows(&links_path)? {
        let bs: usize = field(&row, 0, &links_path)?;
        let cell: usize = field(&row, 1, &links_path)?;
        let user: usize = field(&row, 2, &links_path)?;
        if bs >= cells || cell >= cells || user >= users {
            return Err(Error::parse(&links_path, format!("link ({bs},{cell},{user}) out of range")));
        }
        beta.set(bs, cell, user, field(&row, 3, &links_path)?);
        rho.set(bs, cell, user, field(&row, 4, &links_path)?);
        angle.set(bs, cell, user, field(&row, 5, &links_path)?);
    }

    Ok(Scenario {
        config,
        bs_positions,
        user_positions,
        beta,
        rho,
        angle,
        velocity,
    })
}
