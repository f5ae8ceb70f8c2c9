use std::fs::File;
use std::io::BufWriter;
use std::path::{Path, PathBuf};

use rayon::prelude::*;

use crate::{RunError, Settings, Suite, CSV_HEADER};

/// Replicates simulated between two collector passes.
const CHUNK: u64 = 8192;

pub(crate) struct Engine {
    pool: rayon::ThreadPool,
    suite: Suite,
}

impl Engine {
    pub fn new(settings: &Settings) -> Result<Self, RunError> {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(settings.threads)
            .build()
            .map_err(|e| RunError::Config(format!("threads: {e}")))?;
        Ok(Engine {
            pool,
            suite: settings.suite,
        })
    }

    /// Simulates replicates `0..count` in parallel and hands the results to
    /// `consume` in replicate order, so the output does not depend on the
    /// number of workers. `init` builds per-worker scratch state.
    pub fn replicates<S, T, I, F, C>(&self, count: u64, init: I, sim: F, mut consume: C) -> Result<(), RunError>
    where
        T: Send,
        I: Fn() -> S + Sync + Send,
        F: Fn(&mut S, u64) -> rrtlevels::Result<T> + Sync + Send,
        C: FnMut(u64, T) -> Result<(), RunError>,
    {
        let mut start = 0;
        while start < count {
            let end = count.min(start + CHUNK);
            let batch: Vec<rrtlevels::Result<T>> = self
                .pool
                .install(|| (start..end).into_par_iter().map_init(&init, |s, r| sim(s, r)).collect());
            for (r, item) in (start..).zip(batch) {
                consume(r, item.map_err(|e| RunError::core(self.suite, e))?)?;
            }
            start = end;
        }
        Ok(())
    }
}

/// One CSV row; `None` fields are written empty.
#[derive(Clone, Copy, Debug, Default)]
pub(crate) struct Row {
    pub replicate: u64,
    pub n: Option<u64>,
    pub k_or_m: Option<u64>,
    pub u: Option<f64>,
    pub raw: f64,
    pub normalized: Option<f64>,
}

pub(crate) struct CsvSink {
    path: PathBuf,
    writer: csv::Writer<BufWriter<File>>,
    rows: u64,
    buf: String,
}

impl CsvSink {
    pub fn create(path: &Path) -> Result<Self, RunError> {
        let file = File::create(path).map_err(|e| RunError::io(path, e))?;
        let mut writer = csv::WriterBuilder::new()
            .terminator(csv::Terminator::Any(b'\n'))
            .from_writer(BufWriter::with_capacity(1 << 20, file));
        writer.write_record(CSV_HEADER).map_err(|e| csv_error(path, e))?;
        Ok(CsvSink {
            path: path.to_path_buf(),
            writer,
            rows: 0,
            buf: String::new(),
        })
    }

    pub fn push(&mut self, row: Row) -> Result<(), RunError> {
        use std::fmt::Write;
        let fields: [Option<&dyn std::fmt::Display>; 6] = [
            Some(&row.replicate),
            row.n.as_ref().map(|v| v as &dyn std::fmt::Display),
            row.k_or_m.as_ref().map(|v| v as &dyn std::fmt::Display),
            row.u.as_ref().map(|v| v as &dyn std::fmt::Display),
            Some(&row.raw),
            row.normalized.as_ref().map(|v| v as &dyn std::fmt::Display),
        ];
        for field in fields {
            self.buf.clear();
            if let Some(v) = field {
                write!(self.buf, "{v}").expect("writing to a String");
            }
            self.writer
                .write_field(&self.buf)
                .map_err(|e| csv_error(&self.path, e))?;
        }
        self.writer
            .write_record(None::<&[u8]>)
            .map_err(|e| csv_error(&self.path, e))?;
        self.rows += 1;
        Ok(())
    }

    /// Flushes the file and returns the number of data rows.
    pub fn finish(mut self) -> Result<u64, RunError> {
        self.writer.flush().map_err(|e| RunError::io(&self.path, e))?;
        Ok(self.rows)
    }
}

fn csv_error(path: &Path, err: csv::Error) -> RunError {
    match err.into_kind() {
        csv::ErrorKind::Io(e) => RunError::io(path, e),
        other => RunError::io(path, std::io::Error::other(format!("{other:?}"))),
    }
}
