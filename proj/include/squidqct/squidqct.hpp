#pragma once

#include "squidqct/analysis.hpp"
#include "squidqct/circuit.hpp"
#include "squidqct/config.hpp"
#include "squidqct/errors.hpp"
#include "squidqct/hilbert.hpp"
#include "squidqct/io.hpp"
#include "squidqct/noise.hpp"
#include "squidqct/rsj.hpp"
#include "squidqct/section.hpp"
#include "squidqct/spectrum.hpp"
#include "squidqct/unravel.hpp"
