#pragma once

#include "mtix/bench.hpp"
#include "mtix/codecs.hpp"
#include "mtix/error.hpp"
#include "mtix/factorizer.hpp"
#include "mtix/index_store.hpp"
#include "mtix/matrix.hpp"
#include "mtix/query.hpp"
#include "mtix/remainder.hpp"
