try {
    Cipher cipher = Cipher.getInstance("AES");
    cipher.init(Cipher.ENCRYPT_MODE, secretKey);
} catch (Exception e) {
    e.printStackTrace();
}
