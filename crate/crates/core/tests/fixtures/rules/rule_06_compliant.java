public void saveBytes(byte[] data) {
    try {
        RandomAccessFile file = new RandomAccessFile("/tmp/data.bin", "rw");
        file.write(data);
        file.close();
    } catch (Exception e) {
        e.printStackTrace();
    }
}
