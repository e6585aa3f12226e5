#pragma once

// ringmark: frequency-domain ring watermarking laboratory for deterministic
// diffusion samplers, with an analytic Gaussian-mixture noise predictor.

#include "ringmark/attacks.hpp"
#include "ringmark/dct.hpp"
#include "ringmark/denoiser.hpp"
#include "ringmark/diffusion.hpp"
#include "ringmark/errors.hpp"
#include "ringmark/fft.hpp"
#include "ringmark/grid.hpp"
#include "ringmark/grid_io.hpp"
#include "ringmark/image_ops.hpp"
#include "ringmark/losses.hpp"
#include "ringmark/metrics.hpp"
#include "ringmark/mixture.hpp"
#include "ringmark/optimizer.hpp"
#include "ringmark/parallel.hpp"
#include "ringmark/pipeline.hpp"
#include "ringmark/probe.hpp"
#include "ringmark/rng.hpp"
#include "ringmark/schedule.hpp"
#include "ringmark/serialize.hpp"
#include "ringmark/watermark.hpp"
