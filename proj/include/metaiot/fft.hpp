#ifndef METAIOT_FFT_HPP
#define METAIOT_FFT_HPP

#include <vector>

#include "metaiot/common.hpp"

namespace metaiot::fft {

// In-place iterative radix-2 transform; n must be a power of two.
void fft_pow2(std::vector<cplx>& a, bool inverse);

// Arbitrary-length DFT: radix-2 when possible, Bluestein otherwise.
std::vector<cplx> dft(const std::vector<cplx>& input);

// DFT of a real vector.
std::vector<cplx> dft_real(const std::vector<double>& input);

}  // namespace metaiot::fft

#endif
