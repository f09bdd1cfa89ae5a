use super::encoder::coefficient_row;
use super::gf256;
use super::packet::{FecPacket, PacketHeader};
use super::FecError;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum DecodeProgress {
    Pending { rank: usize },
    Done(Vec<u8>),
}

#[derive(Debug, Clone)]
struct Row {
    coefficients: Vec<u8>,
    payload: Vec<u8>,
}

/// Incremental Gaussian elimination over GF(256) for one message.
///
/// Rows are kept in echelon form as they arrive: each stored row has a
/// leading 1 in its pivot column and zeros in every earlier column. Back
/// substitution runs once, when the rank reaches `k`.
#[derive(Debug, Clone)]
pub struct FountainDecoder {
    header: PacketHeader,
    k: usize,
    rows: Vec<Row>,
    pivot_of_column: Vec<Option<usize>>,
    seen: Vec<bool>,
    elimination_ops: u64,
    complete: bool,
}

impl FountainDecoder {
    /// Workspace sized from the header of any packet of the message.
    pub fn new(header: &PacketHeader) -> Result<Self, FecError> {
        let k = header.source_count as usize;
        let block = header.payload_len as usize;
        if k == 0 || block == 0 {
            return Err(FecError::InconsistentHeader("zero source count or payload length"));
        }
        let len = header.message_len as usize;
        if len > k * block || len <= (k - 1) * block {
            return Err(FecError::InconsistentHeader("message length does not match k blocks"));
        }
        Ok(FountainDecoder {
            header: *header,
            k,
            rows: Vec::with_capacity(k),
            pivot_of_column: vec![None; k],
            seen: vec![false; u16::MAX as usize + 1],
            elimination_ops: 0,
            complete: false,
        })
    }

    pub fn rank(&self) -> usize {
        self.rows.len()
    }

    pub fn source_count(&self) -> usize {
        self.k
    }

    /// Row operations performed so far; zero when only systematic packets arrived.
    pub fn elimination_ops(&self) -> u64 {
        self.elimination_ops
    }

    pub fn is_complete(&self) -> bool {
        self.complete
    }

    fn check_header(&self, h: &PacketHeader) -> Result<(), FecError> {
        let mine = &self.header;
        if h.packet_type != mine.packet_type {
            return Err(FecError::InconsistentHeader("packet type"));
        }
        if h.session_id != mine.session_id {
            return Err(FecError::InconsistentHeader("session id"));
        }
        if h.frame_id != mine.frame_id {
            return Err(FecError::InconsistentHeader("frame id"));
        }
        if h.source_count != mine.source_count {
            return Err(FecError::InconsistentHeader("source count"));
        }
        if h.prng_seed != mine.prng_seed {
            return Err(FecError::InconsistentHeader("prng seed"));
        }
        if h.payload_len != mine.payload_len {
            return Err(FecError::InconsistentHeader("payload length"));
        }
        if h.message_len != mine.message_len {
            return Err(FecError::InconsistentHeader("message length"));
        }
        Ok(())
    }

    pub fn push(&mut self, packet: &FecPacket) -> Result<DecodeProgress, FecError> {
        if self.complete {
            return Err(FecError::AlreadyComplete);
        }
        self.check_header(&packet.header)?;
        if packet.payload.len() != self.header.payload_len as usize {
            return Err(FecError::PayloadLengthMismatch {
                expected: self.header.payload_len as usize,
                got: packet.payload.len(),
            });
        }
        let index = packet.header.packet_index as usize;
        if self.seen[index] {
            return Ok(DecodeProgress::Pending { rank: self.rank() });
        }
        self.seen[index] = true;

        let coefficients = if index < self.k {
            let mut unit = vec![0u8; self.k];
            unit[index] = 1;
            unit
        } else {
            coefficient_row(self.header.prng_seed, index as u16, self.k)
        };
        let mut row = Row {
            coefficients,
            payload: packet.payload.clone(),
        };
        self.reduce(&mut row);
        if let Some(lead) = row.coefficients.iter().position(|&c| c != 0) {
            let c = row.coefficients[lead];
            if c != 1 {
                let scale = gf256::inv(c);
                gf256::scale_slice(&mut row.coefficients, scale);
                gf256::scale_slice(&mut row.payload, scale);
            }
            self.pivot_of_column[lead] = Some(self.rows.len());
            self.rows.push(row);
        }

        if self.rank() < self.k {
            return Ok(DecodeProgress::Pending { rank: self.rank() });
        }
        self.back_substitute();
        self.complete = true;
        Ok(DecodeProgress::Done(self.assemble()))
    }

    fn reduce(&mut self, row: &mut Row) {
        for col in 0..self.k {
            let c = row.coefficients[col];
            if c == 0 {
                continue;
            }
            if let Some(p) = self.pivot_of_column[col] {
                let pivot = &self.rows[p];
                gf256::mul_add_slice(&mut row.coefficients[col..], &pivot.coefficients[col..], c);
                gf256::mul_add_slice(&mut row.payload, &pivot.payload, c);
                self.elimination_ops += 1;
            }
        }
    }

    fn back_substitute(&mut self) {
        for col in (0..self.k).rev() {
            let p = self.pivot_of_column[col].expect("full rank");
            let (pivot_coeffs, pivot_payload) = {
                let r = &self.rows[p];
                (r.coefficients[col..].to_vec(), r.payload.clone())
            };
            for above in 0..col {
                let r = self.pivot_of_column[above].expect("full rank");
                let c = self.rows[r].coefficients[col];
                if c != 0 {
                    let row = &mut self.rows[r];
                    gf256::mul_add_slice(&mut row.coefficients[col..], &pivot_coeffs, c);
                    gf256::mul_add_slice(&mut row.payload, &pivot_payload, c);
                    self.elimination_ops += 1;
                }
            }
        }
    }

    fn assemble(&self) -> Vec<u8> {
        let mut message = Vec::with_capacity(self.k * self.header.payload_len as usize);
        for col in 0..self.k {
            let r = self.pivot_of_column[col].expect("full rank");
            message.extend_from_slice(&self.rows[r].payload);
        }
        message.truncate(self.header.message_len as usize);
        message
    }
}
