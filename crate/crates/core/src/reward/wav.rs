//! 16-bit mono RIFF wave I/O.

use std::io::{Cursor, Read, Seek, Write};
use std::path::Path;

use super::AudioBuffer;

#[derive(Debug, thiserror::Error)]
pub enum WavError {
    #[error(transparent)]
    Hound(#[from] hound::Error),
    #[error("expected mono audio, found {0} channels")]
    NotMono(u16),
}

fn spec(sample_rate: u32) -> hound::WavSpec {
    hound::WavSpec { channels: 1, sample_rate, bits_per_sample: 16, sample_format: hound::SampleFormat::Int }
}

pub fn write_to<W: Write + Seek>(audio: &AudioBuffer, out: W) -> Result<(), WavError> {
    let mut w = hound::WavWriter::new(out, spec(audio.sample_rate_hz))?;
    for s in audio.pcm16() {
        w.write_sample(s)?;
    }
    w.finalize()?;
    Ok(())
}

pub fn to_bytes(audio: &AudioBuffer) -> Result<Vec<u8>, WavError> {
    let mut cur = Cursor::new(Vec::new());
    write_to(audio, &mut cur)?;
    Ok(cur.into_inner())
}

pub fn write(audio: &AudioBuffer, path: &Path) -> Result<(), WavError> {
    let f = std::io::BufWriter::new(std::fs::File::create(path).map_err(hound::Error::IoError)?);
    write_to(audio, f)
}

pub fn read_from<R: Read>(input: R) -> Result<AudioBuffer, WavError> {
    let mut r = hound::WavReader::new(input)?;
    let s = r.spec();
    if s.channels != 1 {
        return Err(WavError::NotMono(s.channels));
    }
    let samples = match s.sample_format {
        hound::SampleFormat::Float => r.samples::<f32>().map(|x| x.map(f64::from)).collect::<Result<_, _>>()?,
        hound::SampleFormat::Int => {
            // Symmetric scale, matching how buffers are quantized on write.
            let full = ((1i64 << (s.bits_per_sample - 1)) - 1) as f64;
            r.samples::<i32>().map(|x| x.map(|v| v as f64 / full)).collect::<Result<_, _>>()?
        }
    };
    Ok(AudioBuffer::new(s.sample_rate, samples))
}

pub fn read(path: &Path) -> Result<AudioBuffer, WavError> {
    let f = std::io::BufReader::new(std::fs::File::open(path).map_err(hound::Error::IoError)?);
    read_from(f)
}
