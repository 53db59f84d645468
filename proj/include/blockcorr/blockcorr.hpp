#pragma once

#include "blockcorr/block_corr.hpp"
#include "blockcorr/block_spec.hpp"
#include "blockcorr/canonical.hpp"
#include "blockcorr/cf.hpp"
#include "blockcorr/error.hpp"
#include "blockcorr/inference.hpp"
#include "blockcorr/io.hpp"
#include "blockcorr/logmap.hpp"
