#pragma once

#include "mipform/hessenberg/gim1.hpp"
#include "mipform/hessenberg/lower.hpp"
#include "mipform/hessenberg/qbd.hpp"
#include "mipform/hessenberg/report.hpp"
#include "mipform/hessenberg/takine.hpp"
#include "mipform/hessenberg/upper.hpp"
