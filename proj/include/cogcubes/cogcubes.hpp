#pragma once

// Core library. The HTTP binding lives in http_server.hpp and is not pulled in here.

#include "agents.hpp"
#include "analysis.hpp"
#include "error.hpp"
#include "geometry.hpp"
#include "measures.hpp"
#include "network.hpp"
#include "record.hpp"
#include "service.hpp"
#include "session.hpp"
#include "shape_io.hpp"
#include "similarity.hpp"
#include "tasks.hpp"
