use std::fmt::Write as _;
use std::path::Path;
use std::sync::Arc;

use super::rotation::{euler_to_matrix, matrix_to_euler};
use super::{Channel, MotionSequence, Skeleton, ROT_DIM};
use crate::error::{Error, Result};

struct Tokens<'a> {
    items: Vec<(usize, &'a str)>,
    pos: usize,
}

impl<'a> Tokens<'a> {
    fn new(text: &'a str) -> Self {
        let items = text
            .lines()
            .enumerate()
            .flat_map(|(n, l)| l.split_whitespace().map(move |w| (n + 1, w)))
            .collect();
        Tokens { items, pos: 0 }
    }

    fn line(&self) -> usize {
        self.items
            .get(self.pos)
            .or_else(|| self.items.last())
            .map_or(0, |t| t.0)
    }

    fn next(&mut self) -> Result<(usize, &'a str)> {
        let tok = self
            .items
            .get(self.pos)
            .copied()
            .ok_or_else(|| Error::bvh(self.line(), "unexpected end of file"))?;
        self.pos += 1;
        Ok(tok)
    }

    fn peek(&self) -> Option<&'a str> {
        self.items.get(self.pos).map(|t| t.1)
    }

    fn expect(&mut self, word: &str) -> Result<usize> {
        let (line, tok) = self.next()?;
        if tok != word {
            return Err(Error::bvh(line, format!("expected `{word}`, found `{tok}`")));
        }
        Ok(line)
    }

    fn number(&mut self) -> Result<f64> {
        let (line, tok) = self.next()?;
        tok.parse::<f64>()
            .map_err(|_| Error::bvh(line, format!("expected a number, found `{tok}`")))
    }
}

fn parse_joint(
    toks: &mut Tokens<'_>,
    name: String,
    parent: Option<usize>,
    sk: &mut Skeleton,
) -> Result<()> {
    let index = sk.joint_names.len();
    sk.joint_names.push(name);
    sk.parents.push(parent);
    sk.offsets.push([0.0; 3]);
    sk.channels.push(Vec::new());
    sk.end_sites.push(None);
    toks.expect("{")?;
    loop {
        let (line, tok) = toks.next()?;
        match tok {
            "OFFSET" => {
                sk.offsets[index] = [toks.number()?, toks.number()?, toks.number()?];
            }
            "CHANNELS" => {
                let (nline, ntok) = toks.next()?;
                let n: usize = ntok
                    .parse()
                    .map_err(|_| Error::bvh(nline, format!("bad channel count `{ntok}`")))?;
                let mut channels = Vec::with_capacity(n);
                for _ in 0..n {
                    let (cline, ctok) = toks.next()?;
                    let c = Channel::parse(ctok)
                        .ok_or_else(|| Error::bvh(cline, format!("unknown channel `{ctok}`")))?;
                    channels.push(c);
                }
                sk.channels[index] = channels;
            }
            "JOINT" => {
                let (_, child) = toks.next()?;
                parse_joint(toks, child.to_string(), Some(index), sk)?;
            }
            "End" => {
                toks.expect("Site")?;
                toks.expect("{")?;
                toks.expect("OFFSET")?;
                sk.end_sites[index] = Some([toks.number()?, toks.number()?, toks.number()?]);
                toks.expect("}")?;
            }
            "}" => return Ok(()),
            other => {
                return Err(Error::bvh(line, format!("unexpected `{other}` in joint block")));
            }
        }
    }
}

/// Converts one frame of channel values into rotations and a root position.
fn frame_to_pose(sk: &Skeleton, values: &[f64], rotations: &mut Vec<f64>, root: &mut Vec<f64>) {
    let mut cursor = 0;
    let root_index = sk.root();
    for (j, channels) in sk.channels.iter().enumerate() {
        let mut axes = Vec::with_capacity(3);
        let mut angles = Vec::with_capacity(3);
        let mut position = sk.offsets[j];
        for &c in channels {
            let v = values[cursor];
            cursor += 1;
            if let Some(axis) = c.rotation_axis() {
                axes.push(axis);
                angles.push(v);
            } else if let Some(axis) = c.position_axis() {
                position[axis] = v;
            }
        }
        rotations.extend_from_slice(&euler_to_matrix(&axes, &angles));
        if j == root_index {
            root.extend_from_slice(&position);
        }
    }
}

/// Parses BVH text into a motion sequence carrying its skeleton.
pub fn read_bvh_str(text: &str) -> Result<MotionSequence> {
    let mut toks = Tokens::new(text);
    toks.expect("HIERARCHY")?;
    toks.expect("ROOT")?;
    let (_, root_name) = toks.next()?;
    let mut sk = Skeleton {
        joint_names: Vec::new(),
        parents: Vec::new(),
        offsets: Vec::new(),
        channels: Vec::new(),
        end_sites: Vec::new(),
    };
    parse_joint(&mut toks, root_name.to_string(), None, &mut sk)?;
    if toks.peek() == Some("ROOT") {
        return Err(Error::bvh(toks.line(), "multiple ROOT joints are not supported"));
    }
    toks.expect("MOTION")?;
    toks.expect("Frames:")?;
    let (fline, ftok) = toks.next()?;
    let frames: usize = ftok
        .parse()
        .map_err(|_| Error::bvh(fline, format!("bad frame count `{ftok}`")))?;
    toks.expect("Frame")?;
    let tline = toks.expect("Time:")?;
    let frame_time = toks.number()?;
    if !(frame_time > 0.0) {
        return Err(Error::bvh(tline, "frame time must be positive"));
    }
    if frames == 0 {
        return Err(Error::bvh(fline, "motion has no frames"));
    }
    sk.validate().map_err(|e| Error::bvh(1, e.to_string()))?;

    // Frame rows are line-oriented; each must hold exactly one value per channel.
    let width = sk.channel_count();
    let body_start = toks.pos;
    let mut rows: Vec<(usize, Vec<&str>)> = Vec::new();
    for &(line, tok) in &toks.items[body_start..] {
        match rows.last_mut() {
            Some((l, row)) if *l == line => row.push(tok),
            _ => rows.push((line, vec![tok])),
        }
    }
    if rows.len() != frames {
        return Err(Error::bvh(
            rows.last().map_or(fline, |r| r.0),
            format!("MOTION declares {frames} frames but {} rows follow", rows.len()),
        ));
    }
    let joints = sk.joint_count();
    let mut rotations = Vec::with_capacity(frames * joints * ROT_DIM);
    let mut root = Vec::with_capacity(frames * 3);
    let mut values = Vec::with_capacity(width);
    for (line, row) in rows {
        if row.len() != width {
            return Err(Error::bvh(
                line,
                format!("expected {width} channel values, found {}", row.len()),
            ));
        }
        values.clear();
        for tok in row {
            values.push(
                tok.parse::<f64>()
                    .map_err(|_| Error::bvh(line, format!("bad channel value `{tok}`")))?,
            );
        }
        frame_to_pose(&sk, &values, &mut rotations, &mut root);
    }
    MotionSequence::new(1.0 / frame_time, rotations, root, Arc::new(sk))
}

/// Parses BVH bytes, returning the skeleton alongside the motion.
pub fn parse_bvh(source: &[u8]) -> Result<(Skeleton, MotionSequence)> {
    let text = std::str::from_utf8(source).map_err(|e| Error::bvh(0, e.to_string()))?;
    let motion = read_bvh_str(text)?;
    Ok(((*motion.skeleton).clone(), motion))
}

pub fn parse_bvh_file(path: impl AsRef<Path>) -> Result<MotionSequence> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path)?;
    read_bvh_str(&text).map_err(|e| match e {
        Error::Bvh { line, msg } => Error::Bvh {
            line,
            msg: format!("{}: {msg}", path.display()),
        },
        other => other,
    })
}

fn write_joint(sk: &Skeleton, j: usize, depth: usize, out: &mut String) {
    let pad = "\t".repeat(depth);
    let keyword = if sk.parents[j].is_none() { "ROOT" } else { "JOINT" };
    let o = sk.offsets[j];
    let _ = writeln!(out, "{pad}{keyword} {}", sk.joint_names[j]);
    let _ = writeln!(out, "{pad}{{");
    let _ = writeln!(out, "{pad}\tOFFSET {} {} {}", o[0], o[1], o[2]);
    let names: Vec<&str> = sk.channels[j].iter().map(|c| c.as_str()).collect();
    let _ = writeln!(out, "{pad}\tCHANNELS {} {}", names.len(), names.join(" "));
    for child in (0..sk.joint_count()).filter(|&c| sk.parents[c] == Some(j)) {
        write_joint(sk, child, depth + 1, out);
    }
    if let Some(Some(e)) = sk.end_sites.get(j) {
        let _ = writeln!(out, "{pad}\tEnd Site");
        let _ = writeln!(out, "{pad}\t{{");
        let _ = writeln!(out, "{pad}\t\tOFFSET {} {} {}", e[0], e[1], e[2]);
        let _ = writeln!(out, "{pad}\t}}");
    }
    let _ = writeln!(out, "{pad}}}");
}

/// Renders a motion sequence as BVH text. Rotations are converted back to
/// Euler angles in each joint's channel order; non-root position channels
/// are written as the joint offset.
pub fn emit_bvh(m: &MotionSequence) -> String {
    let sk = &*m.skeleton;
    // Joints are emitted depth-first, which must match storage order for the
    // frame rows to line up.
    let mut out = String::new();
    out.push_str("HIERARCHY\n");
    write_joint(sk, sk.root(), 0, &mut out);
    out.push_str("MOTION\n");
    let _ = writeln!(out, "Frames: {}", m.frames());
    let _ = writeln!(out, "Frame Time: {}", 1.0 / m.fps);
    let order = depth_first_order(sk);
    for t in 0..m.frames() {
        let mut row: Vec<String> = Vec::with_capacity(sk.channel_count());
        for &j in &order {
            let axes: Vec<usize> = sk.channels[j].iter().filter_map(|c| c.rotation_axis()).collect();
            let r = m.rotation(t, j);
            let angles = matrix_to_euler(&axes, &r);
            let mut angle_iter = angles.into_iter();
            let position = if sk.parents[j].is_none() {
                m.root_position(t)
            } else {
                sk.offsets[j]
            };
            for c in &sk.channels[j] {
                let v = match (c.rotation_axis(), c.position_axis()) {
                    (Some(_), _) => angle_iter.next().unwrap_or(0.0),
                    (_, Some(a)) => position[a],
                    _ => 0.0,
                };
                row.push(format!("{v}"));
            }
        }
        out.push_str(&row.join(" "));
        out.push('\n');
    }
    out
}

fn depth_first_order(sk: &Skeleton) -> Vec<usize> {
    fn visit(sk: &Skeleton, j: usize, out: &mut Vec<usize>) {
        out.push(j);
        for c in (0..sk.joint_count()).filter(|&c| sk.parents[c] == Some(j)) {
            visit(sk, c, out);
        }
    }
    let mut out = Vec::with_capacity(sk.joint_count());
    visit(sk, sk.root(), &mut out);
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::motion::rotation;

    const TWO_JOINTS: &str = "HIERARCHY
ROOT Hips
{
	OFFSET 0 0 0
	CHANNELS 6 Xposition Yposition Zposition Zrotation Xrotation Yrotation
	JOINT Spine
	{
		OFFSET 0 10 0
		CHANNELS 3 Zrotation Xrotation Yrotation
		End Site
		{
			OFFSET 0 5 0
		}
	}
}
MOTION
Frames: 2
Frame Time: 0.0166666667
1 2 3 0 0 0 0 0 0
1 2 3 90 0 0 10 20 30
";

    #[test]
    fn single_joint_zero_angles_is_identity() {
        let text = "HIERARCHY\nROOT A\n{\nOFFSET 0 0 0\nCHANNELS 3 Zrotation Xrotation Yrotation\n}\nMOTION\nFrames: 2\nFrame Time: 0.5\n0 0 0\n0 0 0\n";
        let m = read_bvh_str(text).unwrap();
        assert_eq!(m.frames(), 2);
        assert_eq!(m.fps, 2.0);
        for t in 0..2 {
            assert_eq!(m.rotation(t, 0), rotation::IDENTITY);
        }
    }

    #[test]
    fn parses_hierarchy_and_root_positions() {
        let m = read_bvh_str(TWO_JOINTS).unwrap();
        assert_eq!(m.skeleton.joint_names, vec!["Hips", "Spine"]);
        assert_eq!(m.skeleton.parents, vec![None, Some(0)]);
        assert_eq!(m.skeleton.end_sites[1], Some([0.0, 5.0, 0.0]));
        assert_eq!(m.root_position(1), [1.0, 2.0, 3.0]);
        let r = m.rotation(1, 0);
        let expected = [0.0, -1.0, 0.0, 1.0, 0.0, 0.0, 0.0, 0.0, 1.0];
        for (a, b) in r.iter().zip(expected) {
            assert!((a - b).abs() < 1e-15);
        }
    }

    #[test]
    fn frame_count_mismatch_reports_line() {
        let mut text = String::from(TWO_JOINTS);
        text = text.replace("Frames: 2", "Frames: 3");
        match read_bvh_str(&text) {
            Err(Error::Bvh { msg, line }) => {
                assert!(msg.contains("3 frames"), "{msg}");
                assert_eq!(line, 20);
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn channel_count_mismatch_is_error() {
        let text = TWO_JOINTS.replace("1 2 3 0 0 0 0 0 0", "1 2 3 0 0 0 0 0");
        match read_bvh_str(&text) {
            Err(Error::Bvh { line, .. }) => assert_eq!(line, 19),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn unknown_channel_reports_line() {
        let text = TWO_JOINTS.replace("CHANNELS 3 Zrotation", "CHANNELS 3 Wrotation");
        match read_bvh_str(&text) {
            Err(Error::Bvh { line, msg }) => {
                assert_eq!(line, 9);
                assert!(msg.contains("Wrotation"));
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn emit_then_parse_round_trips() {
        let m = read_bvh_str(TWO_JOINTS).unwrap();
        let again = read_bvh_str(&emit_bvh(&m)).unwrap();
        assert_eq!(again.skeleton, m.skeleton);
        for (a, b) in m.rotations.iter().zip(&again.rotations) {
            assert!((a - b).abs() < 1e-9);
        }
        assert_eq!(again.root_positions, m.root_positions);
    }
}
