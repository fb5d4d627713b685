// qbnet.hpp
// Umbrella header: the whole library.

#pragma once

#include "qbnet/channels.hpp"
#include "qbnet/cli.hpp"
#include "qbnet/core.hpp"
#include "qbnet/matrix.hpp"
#include "qbnet/metastate.hpp"
#include "qbnet/net.hpp"
#include "qbnet/netlang.hpp"
#include "qbnet/state.hpp"
