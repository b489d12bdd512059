#pragma once

#include "rvq/rng.hpp"
#include "rvq/vocab.hpp"

namespace rvq {

// Word-drop plus bounded local shuffle for the DN-AE variant. Every
// non-reserved token is dropped independently with probability drop_p (the
// whole draw is resampled until at least one token survives); survivors are
// then permuted so that no token moves more than shuffle_window positions.
TokenSequence noise_sequence(const TokenSequence& x, Rng& rng, double drop_p,
                             int shuffle_window);

}  // namespace rvq
