public void saveBytes(RandomAccessFile file, byte[] data) {
    file.write(data);
}
