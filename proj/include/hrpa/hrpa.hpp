// SPDX-License-Identifier: Apache-2.0
//
// hrpa - angular sensing toolkit for highly reconfigurable pixel antennas
// ------------------------------------------------------------------------

#pragma once

#include "hrpa/angle_grid.hpp"
#include "hrpa/codebook_io.hpp"
#include "hrpa/core.hpp"
#include "hrpa/crlb.hpp"
#include "hrpa/dataset_io.hpp"
#include "hrpa/em_dataset.hpp"
#include "hrpa/optimizer.hpp"
#include "hrpa/parallel.hpp"
#include "hrpa/patterns.hpp"
#include "hrpa/port_network.hpp"
#include "hrpa/sensing_sim.hpp"
#include "hrpa/synthetic.hpp"
#include "hrpa/upa.hpp"
