use slelab::io::{
    read_binary, read_csv, read_driving_binary, read_field_binary, write_binary, write_driving_binary,
    write_driving_csv, write_field_binary, write_field_csv, write_path_csv, write_trace_csv, Header, MAGIC,
};
use slelab::loewner::{extract_trace, generate_driving, DrivingFunction, DrivingOptions, Scheme};
use slelab::stochastic::sample_brownian;
use slelab::Error;

#[test]
fn binary_header_layout() {
    let h = Header { scheme: 0, kappa: 8.0 / 3.0, dt: 1e-3, n: 3 };
    let mut buf = Vec::new();
    write_binary(&mut buf, h, &[1.0, -2.5, f64::MIN_POSITIVE]).unwrap();
    assert_eq!(buf.len(), 32 + 24);
    assert_eq!(&buf[..8], MAGIC);
    assert_eq!(u32::from_le_bytes(buf[28..32].try_into().unwrap()), 3);
    assert_eq!(f64::from_le_bytes(buf[12..20].try_into().unwrap()), 8.0 / 3.0);
    let (h2, data) = read_binary(&buf[..]).unwrap();
    assert_eq!(h2, h);
    assert_eq!(data, vec![1.0, -2.5, f64::MIN_POSITIVE]);
}

#[test]
fn binary_rejects_corruption() {
    let h = Header { scheme: 0, kappa: 2.0, dt: 0.1, n: 2 };
    assert!(write_binary(Vec::new(), h, &[1.0]).is_err());
    let mut buf = Vec::new();
    write_binary(&mut buf, h, &[1.0, 2.0]).unwrap();
    assert!(matches!(read_binary(&buf[..buf.len() - 1]), Err(Error::Parse(_))));
    assert!(matches!(read_binary(&buf[..20]), Err(Error::Parse(_))));
    let mut bad = buf.clone();
    bad[0] = b'X';
    assert!(matches!(read_binary(&bad[..]), Err(Error::Parse(_))));
    let mut unknown = buf.clone();
    unknown[8..12].copy_from_slice(&77u32.to_le_bytes());
    assert!(read_driving_binary(&unknown[..]).is_err());
}

#[test]
fn driving_binary_round_trip_is_bit_exact() {
    let d = generate_driving(Scheme::Sle, 6.0, &[], 1e-3, 0.5, 42, &DrivingOptions::default()).unwrap();
    let mut buf = Vec::new();
    write_driving_binary(&mut buf, &d).unwrap();
    let back = read_driving_binary(&buf[..]).unwrap();
    assert_eq!(back.scheme, d.scheme);
    assert_eq!(back.kappa, d.kappa);
    assert_eq!(back.dt, d.dt);
    assert_eq!(back.w, d.w);
    // The trace is a function of the record alone.
    assert_eq!(extract_trace(&back).unwrap(), extract_trace(&d).unwrap());

    let wp = DrivingFunction::whole_plane_from_angles(4.0, -9.0, 0.01, vec![0.0, 0.1, 0.3], vec![3.0, 3.1, 2.9]);
    let mut buf = Vec::new();
    write_driving_binary(&mut buf, &wp).unwrap();
    let back = read_driving_binary(&buf[..]).unwrap();
    assert_eq!(back.t0, -9.0);
    assert_eq!(back.w, wp.w);
    assert_eq!(back.o, wp.o);
}

#[test]
fn field_binary_round_trip() {
    let samples: Vec<(f64, f64, f64)> = (0..6).map(|k| (k as f64 * 0.5, (k / 3) as f64, (k as f64).sin())).collect();
    let mut buf = Vec::new();
    write_field_binary(&mut buf, 3, 2, 0.5, &samples).unwrap();
    let (nx, ny, back) = read_field_binary(&buf[..]).unwrap();
    assert_eq!((nx, ny), (3, 2));
    assert_eq!(back, samples);
    let mut drv = Vec::new();
    write_binary(&mut drv, Header { scheme: 0, kappa: 1.0, dt: 1.0, n: 2 }, &[3.0, 2.0]).unwrap();
    assert!(read_field_binary(&drv[..]).is_err());
}

#[test]
fn csv_exports_read_back_exactly() {
    let d = generate_driving(Scheme::Sle, 2.0, &[], 1e-2, 0.2, 3, &DrivingOptions::default()).unwrap();
    let mut buf = Vec::new();
    write_driving_csv(&mut buf, &d).unwrap();
    let (head, rows) = read_csv(&buf[..]).unwrap();
    assert_eq!(head, vec!["t", "w"]);
    assert_eq!(rows.len(), d.w.len());
    for (r, w) in rows.iter().zip(&d.w) {
        assert_eq!(r[1], *w);
    }

    let tr = extract_trace(&d).unwrap();
    let mut buf = Vec::new();
    write_trace_csv(&mut buf, &tr).unwrap();
    let (head, rows) = read_csv(&buf[..]).unwrap();
    assert_eq!(head, vec!["t", "re", "im"]);
    for (r, z) in rows.iter().zip(&tr.points) {
        assert_eq!((r[1], r[2]), (z.re, z.im));
    }

    let p = sample_brownian(2, 0.01, 0.1, 0.0, 9).unwrap();
    let mut buf = Vec::new();
    write_path_csv(&mut buf, &p).unwrap();
    let (head, rows) = read_csv(&buf[..]).unwrap();
    assert_eq!(head.len(), 3);
    assert_eq!(rows.iter().map(|r| r[2]).collect::<Vec<_>>(), *p.values_im.as_ref().unwrap());

    let mut buf = Vec::new();
    write_field_csv(&mut buf, &[(0.0, 1.0, 2.0)]).unwrap();
    assert_eq!(String::from_utf8(buf).unwrap(), "x,y,value\n0.0,1.0,2.0\n");
}

#[test]
fn csv_reader_errors() {
    assert!(read_csv(&b""[..]).is_err());
    assert!(read_csv(&b"a,b\n1,2,3\n"[..]).is_err());
    assert!(read_csv(&b"a,b\n1,x\n"[..]).is_err());
    let (_, rows) = read_csv(&b"a,b\n1,2\n\n"[..]).unwrap();
    assert_eq!(rows, vec![vec![1.0, 2.0]]);
}
