//! Ablation grids and the published presets.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::{CellSpec, Mode};
use crate::backends::BackendKind;
use crate::error::{Error, Result};
use crate::prompting::StrategyFlags;

pub const PAPER_LAMBDAS: [f64; 6] = [0.0, 1.0 / 100.0, 1.0 / 50.0, 1.0 / 25.0, 1.0 / 10.0, 1.0];
pub const PAPER_SAMPLE_SIZES: [usize; 6] = [5, 10, 15, 20, 25, 30];
pub const PAPER_FPS: [f64; 5] = [1.0, 2.0, 4.0, 8.0, 16.0];

/// Axes of a grid. Frame-list grids use `lambdas` × `sample_sizes`, video
/// grids use `fps`; mixing the two is an error.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GridAxes {
    pub strategies: Vec<StrategyFlags>,
    pub lambdas: Vec<f64>,
    pub sample_sizes: Vec<usize>,
    pub fps: Vec<f64>,
}

impl GridAxes {
    /// Cartesian product in (strategy, n, λ) or (strategy, fps) order.
    pub fn cells(&self) -> Result<Vec<CellSpec>> {
        if self.strategies.is_empty() {
            return Err(Error::Config("grid needs at least one strategy".into()));
        }
        let frames = !self.lambdas.is_empty() || !self.sample_sizes.is_empty();
        let video = !self.fps.is_empty();
        let mut cells = Vec::new();
        match (frames, video) {
            (true, true) => {
                return Err(Error::Config("grid mixes frame sampling axes with an fps axis".into()));
            }
            (false, false) => return Err(Error::Config("grid has no λ/n or fps axis".into())),
            (true, false) => {
                if self.lambdas.is_empty() || self.sample_sizes.is_empty() {
                    return Err(Error::Config("frame grids need both λ and sample size values".into()));
                }
                for &strategy in &self.strategies {
                    for &n in &self.sample_sizes {
                        for &lambda in &self.lambdas {
                            cells.push(CellSpec {
                                strategy,
                                mode: Mode::Frames { lambda, sample_size: n },
                            });
                        }
                    }
                }
            }
            (false, true) => {
                for &strategy in &self.strategies {
                    for &fps in &self.fps {
                        cells.push(CellSpec {
                            strategy,
                            mode: Mode::Video { fps },
                        });
                    }
                }
            }
        }
        for c in &cells {
            c.mode.validate()?;
        }
        Ok(cells)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Preset {
    Table1,
    Table2,
    Table3,
    Table4,
}

impl Preset {
    pub const ALL: [Preset; 4] = [Preset::Table1, Preset::Table2, Preset::Table3, Preset::Table4];

    pub fn name(self) -> &'static str {
        match self {
            Preset::Table1 => "table1",
            Preset::Table2 => "table2",
            Preset::Table3 => "table3",
            Preset::Table4 => "table4",
        }
    }

    /// Cells of the preset for a backend kind.
    ///
    /// `table1` is the headline comparison: the plain model against the full
    /// method. On a frame-list backend that is (VLLM only, uniform, n=8) and
    /// (SoM + Gaze, λ=1/10, n=15); on a video backend it is SoM + Gaze at
    /// 2 fps. `table4` needs a video-capable backend.
    pub fn cells(self, kind: BackendKind) -> Result<Vec<CellSpec>> {
        let video = kind == BackendKind::VideoFps;
        match self {
            Preset::Table1 if video => Ok(vec![CellSpec {
                strategy: StrategyFlags::SOM_GAZE,
                mode: Mode::Video { fps: 2.0 },
            }]),
            Preset::Table1 => Ok(vec![
                CellSpec {
                    strategy: StrategyFlags::VLLM_ONLY,
                    mode: Mode::Frames {
                        lambda: 0.0,
                        sample_size: 8,
                    },
                },
                CellSpec {
                    strategy: StrategyFlags::SOM_GAZE,
                    mode: Mode::Frames {
                        lambda: 0.1,
                        sample_size: 15,
                    },
                },
            ]),
            _ => {
                let axes = self.axes();
                if video && axes.fps.is_empty() {
                    return Err(Error::Config(format!(
                        "preset {} varies frame sampling and needs a frame_list or mock backend",
                        self.name()
                    )));
                }
                if kind == BackendKind::FrameList && !axes.fps.is_empty() {
                    return Err(Error::Config(format!(
                        "preset {} varies the video frame rate and needs a video_fps or mock backend",
                        self.name()
                    )));
                }
                axes.cells()
            }
        }
    }

    /// Axes of the Cartesian presets. `table1` is not a product and has none.
    pub fn axes(self) -> GridAxes {
        match self {
            Preset::Table1 => GridAxes::default(),
            Preset::Table2 => GridAxes {
                strategies: StrategyFlags::ALL.to_vec(),
                lambdas: PAPER_LAMBDAS.to_vec(),
                sample_sizes: vec![15],
                fps: vec![],
            },
            Preset::Table3 => GridAxes {
                strategies: vec![StrategyFlags::SOM_GAZE],
                lambdas: PAPER_LAMBDAS.to_vec(),
                sample_sizes: PAPER_SAMPLE_SIZES.to_vec(),
                fps: vec![],
            },
            Preset::Table4 => GridAxes {
                strategies: StrategyFlags::ALL.to_vec(),
                lambdas: vec![],
                sample_sizes: vec![],
                fps: PAPER_FPS.to_vec(),
            },
        }
    }
}

impl fmt::Display for Preset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Preset {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Preset::ALL
            .into_iter()
            .find(|p| p.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::Config(format!("unknown preset {s:?}; expected table1, table2, table3 or table4")))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn preset_shapes() {
        let mock = BackendKind::MockRandom;
        assert_eq!(Preset::Table1.cells(mock).unwrap().len(), 2);
        assert_eq!(Preset::Table1.cells(BackendKind::VideoFps).unwrap().len(), 1);
        assert_eq!(Preset::Table2.cells(mock).unwrap().len(), 24);
        assert_eq!(Preset::Table3.cells(mock).unwrap().len(), 36);
        assert_eq!(Preset::Table4.cells(mock).unwrap().len(), 20);
        assert!(Preset::Table4.cells(BackendKind::FrameList).is_err());
        assert!(Preset::Table2.cells(BackendKind::VideoFps).is_err());
    }

    #[test]
    fn mixed_axes_rejected() {
        let mut axes = Preset::Table2.axes();
        axes.fps = vec![2.0];
        assert!(axes.cells().is_err());
        assert!(GridAxes {
            strategies: vec![StrategyFlags::SOM],
            ..Default::default()
        }
        .cells()
        .is_err());
    }

    #[test]
    fn preset_names() {
        for p in Preset::ALL {
            assert_eq!(p.name().parse::<Preset>().unwrap(), p);
        }
        assert!("table5".parse::<Preset>().is_err());
    }
}
