#pragma once

#include "odma_ura/channel.hpp"
#include "odma_ura/codebook_io.hpp"
#include "odma_ura/codebooks.hpp"
#include "odma_ura/fec/crc.hpp"
#include "odma_ura/fec/polar.hpp"
#include "odma_ura/fec/qpsk.hpp"
#include "odma_ura/fec/scl.hpp"
#include "odma_ura/harness.hpp"
#include "odma_ura/metrics.hpp"
#include "odma_ura/receiver.hpp"
#include "odma_ura/rng.hpp"
#include "odma_ura/sysconfig.hpp"
#include "odma_ura/transmitter.hpp"
#include "odma_ura/types.hpp"
