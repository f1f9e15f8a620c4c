//! Hidden-variable record files.

use std::io::{self, Write};

use bellsim_core::{LambdaRecord, LambdaSink, ModelError};

use crate::output::fmt17;

pub const LAMBDA_HEADER: &str = "run,sample_index,delta1,delta2,delta3,delta4,joint";

/// Streams λ records as CSV. Write failures are held until [`finish`].
///
/// [`finish`]: LambdaCsvSink::finish
pub struct LambdaCsvSink<W: Write> {
    out: W,
    started: bool,
    error: Option<io::Error>,
    pub written: u64,
}

impl<W: Write> LambdaCsvSink<W> {
    pub fn new(out: W) -> Self {
        Self {
            out,
            started: false,
            error: None,
            written: 0,
        }
    }

    fn write_batch(&mut self, batch: &[LambdaRecord]) -> io::Result<()> {
        let mut s = String::with_capacity(128 * batch.len() + LAMBDA_HEADER.len() + 1);
        if !self.started {
            s.push_str(LAMBDA_HEADER);
            s.push('\n');
            self.started = true;
        }
        for r in batch {
            s.push_str(&format!("{},{}", r.run, r.sample_index));
            for d in r.phases.delta {
                s.push(',');
                s.push_str(&fmt17(d));
            }
            s.push_str(if r.joint { ",1\n" } else { ",0\n" });
        }
        self.out.write_all(s.as_bytes())
    }

    /// The write error that made the sink fail, if any.
    pub fn take_error(&mut self) -> Option<io::Error> {
        self.error.take()
    }

    pub fn finish(mut self) -> io::Result<W> {
        if let Some(e) = self.error.take() {
            return Err(e);
        }
        if !self.started {
            self.write_batch(&[])?;
        }
        self.out.flush()?;
        Ok(self.out)
    }
}

impl<W: Write> LambdaSink for LambdaCsvSink<W> {
    fn accept(&mut self, batch: &[LambdaRecord]) -> Result<(), ModelError> {
        if self.error.is_some() {
            return Err(ModelError::SinkFailed);
        }
        match self.write_batch(batch) {
            Ok(()) => {
                self.written += batch.len() as u64;
                Ok(())
            }
            Err(e) => {
                self.error = Some(e);
                Err(ModelError::SinkFailed)
            }
        }
    }
}
