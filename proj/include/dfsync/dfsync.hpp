#ifndef DFSYNC_DFSYNC_HPP
#define DFSYNC_DFSYNC_HPP

// Umbrella header.

#include "dfsync/error.hpp"
#include "dfsync/params.hpp"
#include "dfsync/flow.hpp"
#include "dfsync/history.hpp"
#include "dfsync/engine.hpp"
#include "dfsync/maps.hpp"
#include "dfsync/cluster.hpp"
#include "dfsync/fixed_points.hpp"
#include "dfsync/stability.hpp"
#include "dfsync/verify.hpp"
#include "dfsync/io.hpp"
#include "dfsync/config.hpp"

#endif  // DFSYNC_DFSYNC_HPP
