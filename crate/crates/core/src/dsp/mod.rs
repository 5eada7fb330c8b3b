//! Framing, magnitude STFT and the discrete wavelet transform.

mod frame;
mod stft;
mod wavelet;

pub use frame::{frame_signal, FrameSequence, FrameSpec, WindowKind};
pub use stft::{stft_magnitude, Spectrogram, Stft, DEFAULT_FFT_SIZE};
pub use wavelet::{dwt, idwt, WaveletDecomposition, DB4_LOWPASS, DEFAULT_LEVELS};
